#ifndef SALESFORECAST_TRAINING_HPP
#define SALESFORECAST_TRAINING_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "salesforecast/evaluation.hpp"
#include "salesforecast/features.hpp"
#include "salesforecast/nn.hpp"

namespace salesforecast {

enum class TrainMode { global, per_series };

struct TrainConfig {
    std::size_t epochs = 30;
    std::size_t batch_size = 64;
    double learning_rate = 1e-3;
    std::uint64_t seed = 1;
    TrainMode mode = TrainMode::global;

    void validate() const {
        if (epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
        if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be >= 1");
        if (!(learning_rate > 0)) throw std::invalid_argument("train config: learning rate <= 0");
    }
};

struct TrainRun {
    ModelConfig model_config;
    TrainConfig train_config;
    ModelWeights weights;
    std::vector<double> train_loss;      // per-epoch mean MAE, normalized space
    std::vector<double> validation_loss; // per-epoch, only when a validation set is given
    double wall_seconds = 0;
    std::uint64_t seed = 0;
};

class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string worst_block_name(const ModelWeights& w) {
    std::string worst = "?";
    double worst_mag = -1.0;
    for_each_tensor(const_cast<ModelWeights&>(w), [&](const char* name, std::vector<double>& t) {
        for (double v : t) {
            if (!std::isfinite(v)) {
                worst = name;
                worst_mag = std::numeric_limits<double>::infinity();
                return;
            }
            if (std::abs(v) > worst_mag) {
                worst_mag = std::abs(v);
                worst = name;
            }
        }
    });
    return worst;
}

} // namespace detail

/**
 * Seeded mini-batch MAE training with Adam. Windows must already be
 * normalized. Each epoch reshuffles the training order (seeded) and keeps
 * the final partial batch. Dropout masks are drawn per sample per epoch
 * from the same PRNG stream, so the whole trajectory is a pure function of
 * (seed, data, configs).
 */
inline TrainRun train(const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                      const std::vector<FeatureWindow>& windows,
                      const std::vector<FeatureWindow>* validation = nullptr) {
    model_cfg.validate();
    train_cfg.validate();
    if (windows.empty()) throw std::invalid_argument("train: no training windows");

    const auto t0 = std::chrono::steady_clock::now();
    TrainRun run;
    run.model_config = model_cfg;
    run.train_config = train_cfg;
    run.seed = train_cfg.seed;
    run.weights = init_weights(model_cfg, train_cfg.seed);

    AdamState adam;
    adam.learning_rate = train_cfg.learning_rate;

    std::mt19937_64 rng(train_cfg.seed ^ 0xd1b54a32d192ed03ull);
    std::vector<std::size_t> order(windows.size());
    std::iota(order.begin(), order.end(), 0);

    const std::size_t h = model_cfg.hidden_units;
    const double keep_prob = 1.0 - model_cfg.dropout_rate;
    std::bernoulli_distribution keep(keep_prob);
    std::vector<double> mask(h);
    ModelWeights grads = ModelWeights::zeros(model_cfg);
    ForwardCache cache;

    for (std::size_t epoch = 0; epoch < train_cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_abs_err = 0.0;
        for (std::size_t start = 0; start < order.size(); start += train_cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + train_cfg.batch_size);
            const double inv_batch = 1.0 / static_cast<double>(end - start);
            for_each_tensor(grads, [](const char*, std::vector<double>& t) {
                std::fill(t.begin(), t.end(), 0.0);
            });
            for (std::size_t k = start; k < end; ++k) {
                const FeatureWindow& w = windows[order[k]];
                if (model_cfg.dropout_rate > 0.0) {
                    for (std::size_t j = 0; j < h; ++j) mask[j] = keep(rng) ? 1.0 : 0.0;
                } else {
                    std::fill(mask.begin(), mask.end(), 1.0);
                }
                double pred;
                try {
                    pred = forward(model_cfg, run.weights, w.inputs, &mask, &cache);
                } catch (const std::runtime_error& e) {
                    throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) +
                                        ", batch " + std::to_string(start / train_cfg.batch_size) +
                                        "; worst block: " +
                                        detail::worst_block_name(run.weights) + " (" + e.what() +
                                        ")");
                }
                epoch_abs_err += std::abs(pred - w.target);
                backward(model_cfg, run.weights, cache, mae_gradient(pred, w.target) * inv_batch,
                         grads);
            }
            adam_step(adam, run.weights, grads);
        }
        const double epoch_loss = epoch_abs_err / static_cast<double>(windows.size());
        if (!std::isfinite(epoch_loss))
            throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) +
                                "; worst block: " + detail::worst_block_name(run.weights));
        run.train_loss.push_back(epoch_loss);

        if (validation && !validation->empty()) {
            std::vector<double> preds, targets;
            preds.reserve(validation->size());
            for (const auto& w : *validation) {
                preds.push_back(forward(model_cfg, run.weights, w.inputs));
                targets.push_back(w.target);
            }
            run.validation_loss.push_back(loss_mae(preds, targets));
        }
    }

    run.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return run;
}

struct CvResult {
    std::vector<TrainRun> folds;
    std::vector<double> fold_mape;
    double mean_mape = 0;
    double std_mape = 0;
};

/**
 * Expanding-window CV: one seeded run per fold (seed = base + fold index),
 * validation MAPE in original sales units via the supplied scaler.
 */
inline CvResult train_cv(const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                         const std::vector<FeatureWindow>& windows,
                         const std::vector<std::pair<IndexRange, IndexRange>>& folds,
                         const Scaler& scaler) {
    if (folds.empty()) throw std::invalid_argument("train_cv: no folds");
    CvResult out;
    for (std::size_t fi = 0; fi < folds.size(); ++fi) {
        const auto& [train_range, val_range] = folds[fi];
        if (train_range.size() == 0 || val_range.size() == 0)
            throw std::invalid_argument("train_cv: empty fold range");
        std::vector<FeatureWindow> tr(windows.begin() + train_range.begin,
                                      windows.begin() + train_range.end);
        std::vector<FeatureWindow> va(windows.begin() + val_range.begin,
                                      windows.begin() + val_range.end);
        TrainConfig fold_cfg = train_cfg;
        fold_cfg.seed = train_cfg.seed + fi;
        TrainRun run = train(model_cfg, fold_cfg, tr, &va);
        EvalResult ev = evaluate(model_cfg, run.weights, va, scaler);
        out.fold_mape.push_back(ev.mape_percent);
        out.folds.push_back(std::move(run));
    }
    double mean = 0;
    for (double v : out.fold_mape) mean += v;
    mean /= static_cast<double>(out.fold_mape.size());
    double ss = 0;
    for (double v : out.fold_mape) ss += (v - mean) * (v - mean);
    out.mean_mape = mean;
    out.std_mape = out.fold_mape.size() > 1
                       ? std::sqrt(ss / static_cast<double>(out.fold_mape.size() - 1))
                       : 0.0;
    return out;
}

} // namespace salesforecast

#endif

#ifndef SALESFORECAST_NN_HPP
#define SALESFORECAST_NN_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "salesforecast/matrix.hpp"

namespace salesforecast {

struct ModelConfig {
    std::size_t input_dim = 7;
    std::size_t seq_len = 30;
    std::size_t hidden_units = 64;
    std::size_t dense_units = 16;
    std::size_t output_dim = 1;
    double dropout_rate = 0.2;

    void validate() const {
        if (input_dim == 0 || seq_len == 0 || hidden_units == 0 || dense_units == 0 ||
            output_dim == 0)
            throw std::invalid_argument("model config: all dimensions must be positive");
        if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
            throw std::invalid_argument("model config: dropout_rate must be in [0,1)");
    }

    bool operator==(const ModelConfig& o) const {
        return input_dim == o.input_dim && seq_len == o.seq_len &&
               hidden_units == o.hidden_units && dense_units == o.dense_units &&
               output_dim == o.output_dim && dropout_rate == o.dropout_rate;
    }
};

/// Closed-form parameter count: 4 gates + dense + output head.
inline std::size_t param_count(const ModelConfig& c) {
    c.validate();
    const std::size_t h = c.hidden_units;
    return 4 * (h * (h + c.input_dim) + h) + (c.dense_units * h + c.dense_units) +
           (c.output_dim * c.dense_units + c.output_dim);
}

struct GateWeights {
    Matrix w;              // hidden x (hidden + input_dim), acts on [h_{t-1}, x_t]
    std::vector<double> b; // hidden
};

struct LstmCellWeights {
    GateWeights forget, input, candidate, output;
};

struct ModelWeights {
    LstmCellWeights lstm;
    Matrix dense_w; // dense_units x hidden
    std::vector<double> dense_b;
    Matrix out_w; // output_dim x dense_units
    std::vector<double> out_b;

    static ModelWeights zeros(const ModelConfig& c) {
        c.validate();
        ModelWeights w;
        const std::size_t cat = c.hidden_units + c.input_dim;
        for (GateWeights* g : {&w.lstm.forget, &w.lstm.input, &w.lstm.candidate, &w.lstm.output}) {
            g->w = Matrix(c.hidden_units, cat);
            g->b.assign(c.hidden_units, 0.0);
        }
        w.dense_w = Matrix(c.dense_units, c.hidden_units);
        w.dense_b.assign(c.dense_units, 0.0);
        w.out_w = Matrix(c.output_dim, c.dense_units);
        w.out_b.assign(c.output_dim, 0.0);
        return w;
    }
};

/// Visit every tensor in the frozen serialization order:
/// W_f, b_f, W_i, b_i, W_C, b_C, W_o, b_o, dense W, dense b, output W, output b.
template <typename Weights, typename Fn>
void for_each_tensor(Weights& w, Fn&& fn) {
    fn("W_f", w.lstm.forget.w.storage());
    fn("b_f", w.lstm.forget.b);
    fn("W_i", w.lstm.input.w.storage());
    fn("b_i", w.lstm.input.b);
    fn("W_C", w.lstm.candidate.w.storage());
    fn("b_C", w.lstm.candidate.b);
    fn("W_o", w.lstm.output.w.storage());
    fn("b_o", w.lstm.output.b);
    fn("dense_W", w.dense_w.storage());
    fn("dense_b", w.dense_b);
    fn("output_W", w.out_w.storage());
    fn("output_b", w.out_b);
}

inline std::size_t tensor_element_count(const ModelWeights& w) {
    std::size_t n = 0;
    for_each_tensor(const_cast<ModelWeights&>(w),
                    [&](const char*, std::vector<double>& t) { n += t.size(); });
    return n;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

namespace detail {

// One LSTM step. All output pointers are hidden-sized; concat is
// (hidden + input_dim)-sized scratch filled with [h_prev, x].
inline void lstm_step(const LstmCellWeights& w, std::size_t hidden, std::size_t input_dim,
                      const double* x, const double* h_prev, const double* c_prev, double* concat,
                      double* f, double* i, double* g, double* o, double* c, double* tanh_c,
                      double* h) {
    for (std::size_t j = 0; j < hidden; ++j) concat[j] = h_prev[j];
    for (std::size_t j = 0; j < input_dim; ++j) concat[hidden + j] = x[j];

    matvec(w.forget.w, concat, f);
    matvec(w.input.w, concat, i);
    matvec(w.candidate.w, concat, g);
    matvec(w.output.w, concat, o);
    for (std::size_t j = 0; j < hidden; ++j) {
        f[j] = sigmoid(f[j] + w.forget.b[j]);
        i[j] = sigmoid(i[j] + w.input.b[j]);
        g[j] = std::tanh(g[j] + w.candidate.b[j]);
        o[j] = sigmoid(o[j] + w.output.b[j]);
        c[j] = f[j] * c_prev[j] + i[j] * g[j];
        tanh_c[j] = std::tanh(c[j]);
        h[j] = o[j] * tanh_c[j];
    }
}

} // namespace detail

struct LstmStepResult {
    std::vector<double> h, c;
    std::vector<double> f, i, g, o, tanh_c; // gate cache for backward
};

/// Single-step cell: gates via sigmoid, candidate via tanh,
/// c_t = f⊙c_prev + i⊙g, h_t = o⊙tanh(c_t).
inline LstmStepResult lstm_cell_forward(const LstmCellWeights& w, const std::vector<double>& x,
                                        const std::vector<double>& h_prev,
                                        const std::vector<double>& c_prev) {
    const std::size_t hidden = w.forget.b.size();
    const std::size_t input_dim = w.forget.w.cols() - hidden;
    if (x.size() != input_dim || h_prev.size() != hidden || c_prev.size() != hidden)
        throw std::invalid_argument("lstm_cell_forward: shape mismatch");
    LstmStepResult r;
    r.h.resize(hidden);
    r.c.resize(hidden);
    r.f.resize(hidden);
    r.i.resize(hidden);
    r.g.resize(hidden);
    r.o.resize(hidden);
    r.tanh_c.resize(hidden);
    std::vector<double> concat(hidden + input_dim);
    detail::lstm_step(w, hidden, input_dim, x.data(), h_prev.data(), c_prev.data(), concat.data(),
                      r.f.data(), r.i.data(), r.g.data(), r.o.data(), r.c.data(), r.tanh_c.data(),
                      r.h.data());
    for (double v : r.h)
        if (!std::isfinite(v)) throw std::runtime_error("lstm_cell_forward: non-finite output");
    return r;
}

/// Everything backward() needs from one forward pass.
struct ForwardCache {
    Matrix concat;                     // seq_len x (hidden + input_dim)
    Matrix f, i, g, o, c, tanh_c;      // seq_len x hidden each
    std::vector<double> dropped;       // post-dropout final hidden state
    std::vector<double> dropout_mask;  // empty in infer mode
    double keep_scale = 1.0;           // 1/(1-p) in train mode
    std::vector<double> dense_pre, dense_act;
    double prediction = 0.0;
};

/**
 * Full model forward: LSTM unrolled seq_len steps from zero state, inverted
 * dropout on the final hidden state (train mode only), Dense+ReLU, linear
 * scalar output. Pass a dropout mask of 0/1 keep flags for train mode,
 * nullptr for inference.
 */
inline double forward(const ModelConfig& cfg, const ModelWeights& w, const Matrix& window,
                      const std::vector<double>* dropout_mask = nullptr,
                      ForwardCache* cache = nullptr) {
    require_shape(window, cfg.seq_len, cfg.input_dim, "forward: window");
    const std::size_t h = cfg.hidden_units;
    const std::size_t cat = h + cfg.input_dim;
    if (dropout_mask && dropout_mask->size() != h)
        throw std::invalid_argument("forward: dropout mask size mismatch");

    ForwardCache local;
    ForwardCache& cc = cache ? *cache : local;
    cc.concat = Matrix(cfg.seq_len, cat);
    for (Matrix* m : {&cc.f, &cc.i, &cc.g, &cc.o, &cc.c, &cc.tanh_c})
        *m = Matrix(cfg.seq_len, h);

    std::vector<double> h_state(h, 0.0), c_state(h, 0.0), h_next(h);
    for (std::size_t t = 0; t < cfg.seq_len; ++t) {
        detail::lstm_step(w.lstm, h, cfg.input_dim, window.row(t), h_state.data(), c_state.data(),
                          cc.concat.row(t), cc.f.row(t), cc.i.row(t), cc.g.row(t), cc.o.row(t),
                          cc.c.row(t), cc.tanh_c.row(t), h_next.data());
        h_state = h_next;
        for (std::size_t j = 0; j < h; ++j) c_state[j] = cc.c(t, j);
    }

    cc.dropped.resize(h);
    if (dropout_mask) {
        cc.dropout_mask = *dropout_mask;
        cc.keep_scale = 1.0 / (1.0 - cfg.dropout_rate);
        for (std::size_t j = 0; j < h; ++j)
            cc.dropped[j] = h_state[j] * cc.dropout_mask[j] * cc.keep_scale;
    } else {
        cc.dropout_mask.clear();
        cc.keep_scale = 1.0;
        cc.dropped = h_state;
    }

    cc.dense_pre.resize(cfg.dense_units);
    cc.dense_act.resize(cfg.dense_units);
    matvec(w.dense_w, cc.dropped.data(), cc.dense_pre.data());
    for (std::size_t j = 0; j < cfg.dense_units; ++j) {
        cc.dense_pre[j] += w.dense_b[j];
        cc.dense_act[j] = cc.dense_pre[j] > 0.0 ? cc.dense_pre[j] : 0.0;
    }

    double pred = w.out_b[0];
    for (std::size_t j = 0; j < cfg.dense_units; ++j) pred += w.out_w(0, j) * cc.dense_act[j];
    if (!std::isfinite(pred)) throw std::runtime_error("forward: non-finite prediction");
    cc.prediction = pred;
    return pred;
}

/// Mean absolute error; subgradient at zero residual is 0.
inline double loss_mae(const std::vector<double>& predictions,
                       const std::vector<double>& targets) {
    if (predictions.empty()) throw std::invalid_argument("loss_mae: empty input");
    if (predictions.size() != targets.size())
        throw std::invalid_argument("loss_mae: length mismatch");
    double sum = 0.0;
    for (std::size_t k = 0; k < predictions.size(); ++k)
        sum += std::abs(predictions[k] - targets[k]);
    return sum / static_cast<double>(predictions.size());
}

inline double mae_gradient(double prediction, double target) {
    const double r = prediction - target;
    return r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0);
}

/**
 * Backpropagation through time. Accumulates exact gradients of a scalar
 * loss into `grads` (zero it first, or reuse to sum over a batch), given
 * d(loss)/d(prediction).
 */
inline void backward(const ModelConfig& cfg, const ModelWeights& w, const ForwardCache& cc,
                     double d_prediction, ModelWeights& grads) {
    const std::size_t h = cfg.hidden_units;
    const std::size_t cat = h + cfg.input_dim;
    if (cc.concat.rows() != cfg.seq_len || cc.concat.cols() != cat)
        throw std::invalid_argument("backward: cache does not match config");

    // Output head.
    grads.out_b[0] += d_prediction;
    std::vector<double> d_dense_act(cfg.dense_units);
    for (std::size_t j = 0; j < cfg.dense_units; ++j) {
        grads.out_w(0, j) += d_prediction * cc.dense_act[j];
        d_dense_act[j] = w.out_w(0, j) * d_prediction;
    }

    // Dense + ReLU.
    std::vector<double> d_pre(cfg.dense_units);
    for (std::size_t j = 0; j < cfg.dense_units; ++j)
        d_pre[j] = cc.dense_pre[j] > 0.0 ? d_dense_act[j] : 0.0;
    outer_add(grads.dense_w, d_pre.data(), cc.dropped.data());
    for (std::size_t j = 0; j < cfg.dense_units; ++j) grads.dense_b[j] += d_pre[j];
    std::vector<double> d_h(h, 0.0);
    matvec_transpose_add(w.dense_w, d_pre.data(), d_h.data());

    // Dropout.
    if (!cc.dropout_mask.empty())
        for (std::size_t j = 0; j < h; ++j) d_h[j] *= cc.dropout_mask[j] * cc.keep_scale;

    // BPTT over the unrolled sequence.
    std::vector<double> d_c(h, 0.0);
    std::vector<double> dzf(h), dzi(h), dzg(h), dzo(h), d_concat(cat);
    for (std::size_t ti = cfg.seq_len; ti-- > 0;) {
        const double* f = cc.f.row(ti);
        const double* i = cc.i.row(ti);
        const double* g = cc.g.row(ti);
        const double* o = cc.o.row(ti);
        const double* tc = cc.tanh_c.row(ti);
        const double* c_prev = ti > 0 ? cc.c.row(ti - 1) : nullptr;

        for (std::size_t j = 0; j < h; ++j) {
            const double cp = c_prev ? c_prev[j] : 0.0;
            const double dcj = d_c[j] + d_h[j] * o[j] * (1.0 - tc[j] * tc[j]);
            const double doj = d_h[j] * tc[j];
            dzf[j] = dcj * cp * f[j] * (1.0 - f[j]);
            dzi[j] = dcj * g[j] * i[j] * (1.0 - i[j]);
            dzg[j] = dcj * i[j] * (1.0 - g[j] * g[j]);
            dzo[j] = doj * o[j] * (1.0 - o[j]);
            d_c[j] = dcj * f[j]; // carried to step ti-1
        }

        const double* concat = cc.concat.row(ti);
        outer_add(grads.lstm.forget.w, dzf.data(), concat);
        outer_add(grads.lstm.input.w, dzi.data(), concat);
        outer_add(grads.lstm.candidate.w, dzg.data(), concat);
        outer_add(grads.lstm.output.w, dzo.data(), concat);
        for (std::size_t j = 0; j < h; ++j) {
            grads.lstm.forget.b[j] += dzf[j];
            grads.lstm.input.b[j] += dzi[j];
            grads.lstm.candidate.b[j] += dzg[j];
            grads.lstm.output.b[j] += dzo[j];
        }

        std::fill(d_concat.begin(), d_concat.end(), 0.0);
        matvec_transpose_add(w.lstm.forget.w, dzf.data(), d_concat.data());
        matvec_transpose_add(w.lstm.input.w, dzi.data(), d_concat.data());
        matvec_transpose_add(w.lstm.candidate.w, dzg.data(), d_concat.data());
        matvec_transpose_add(w.lstm.output.w, dzo.data(), d_concat.data());
        for (std::size_t j = 0; j < h; ++j) d_h[j] = d_concat[j];
    }
}

/// Adam with bias correction. Moment buffers are allocated on first use.
struct AdamState {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    long step = 0;
    std::vector<std::vector<double>> m, v;
};

inline void adam_step(AdamState& st, ModelWeights& weights, const ModelWeights& grads) {
    std::vector<std::vector<double>*> wt, gt;
    for_each_tensor(weights, [&](const char*, std::vector<double>& t) { wt.push_back(&t); });
    for_each_tensor(const_cast<ModelWeights&>(grads),
                    [&](const char*, std::vector<double>& t) { gt.push_back(&t); });
    if (st.m.empty()) {
        st.m.resize(wt.size());
        st.v.resize(wt.size());
        for (std::size_t k = 0; k < wt.size(); ++k) {
            st.m[k].assign(wt[k]->size(), 0.0);
            st.v[k].assign(wt[k]->size(), 0.0);
        }
    }
    for (std::size_t k = 0; k < wt.size(); ++k)
        if (wt[k]->size() != gt[k]->size() || wt[k]->size() != st.m[k].size())
            throw std::invalid_argument("adam_step: shape mismatch");

    ++st.step;
    const double bc1 = 1.0 - std::pow(st.beta1, st.step);
    const double bc2 = 1.0 - std::pow(st.beta2, st.step);
    for (std::size_t k = 0; k < wt.size(); ++k) {
        std::vector<double>& wv = *wt[k];
        const std::vector<double>& gv = *gt[k];
        std::vector<double>& mv = st.m[k];
        std::vector<double>& vv = st.v[k];
        for (std::size_t j = 0; j < wv.size(); ++j) {
            mv[j] = st.beta1 * mv[j] + (1.0 - st.beta1) * gv[j];
            vv[j] = st.beta2 * vv[j] + (1.0 - st.beta2) * gv[j] * gv[j];
            const double m_hat = mv[j] / bc1;
            const double v_hat = vv[j] / bc2;
            const double upd = st.learning_rate * m_hat / (std::sqrt(v_hat) + st.epsilon);
            if (!std::isfinite(upd)) throw std::runtime_error("adam_step: non-finite update");
            wv[j] -= upd;
        }
    }
}

/**
 * Seeded Glorot-uniform init for all weight matrices; biases zero except
 * the forget gate, which starts at 1.0.
 */
inline ModelWeights init_weights(const ModelConfig& cfg, std::uint64_t seed) {
    ModelWeights w = ModelWeights::zeros(cfg);
    std::mt19937_64 rng(seed);
    auto glorot = [&](Matrix& m, std::size_t fan_in, std::size_t fan_out) {
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (double& v : m.storage()) v = dist(rng);
    };
    const std::size_t cat = cfg.hidden_units + cfg.input_dim;
    glorot(w.lstm.forget.w, cat, cfg.hidden_units);
    glorot(w.lstm.input.w, cat, cfg.hidden_units);
    glorot(w.lstm.candidate.w, cat, cfg.hidden_units);
    glorot(w.lstm.output.w, cat, cfg.hidden_units);
    glorot(w.dense_w, cfg.hidden_units, cfg.dense_units);
    glorot(w.out_w, cfg.dense_units, cfg.output_dim);
    std::fill(w.lstm.forget.b.begin(), w.lstm.forget.b.end(), 1.0);
    return w;
}

struct GradCheckReport {
    struct Block {
        std::string name;
        double max_rel_error = 0.0;
    };
    std::vector<Block> blocks;
    std::string worst_block;
    double max_rel_error = 0.0;
    double tolerance = 0.0;
    bool passed = false;
};

/**
 * Analytic gradients vs central finite differences on a random small
 * instance with MAE loss against a fixed far target (so the residual sign
 * never flips under perturbation).
 */
inline GradCheckReport grad_check(const ModelConfig& cfg, std::uint64_t seed, double tolerance,
                                  double fd_step = 1e-5,
                                  void (*tamper_gradients)(ModelWeights&) = nullptr) {
    cfg.validate();
    ModelWeights weights = init_weights(cfg, seed);
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    Matrix window(cfg.seq_len, cfg.input_dim);
    for (double& v : window.storage()) v = dist(rng);
    const double target = 5.0;

    ForwardCache cache;
    const double pred = forward(cfg, weights, window, nullptr, &cache);
    ModelWeights analytic = ModelWeights::zeros(cfg);
    backward(cfg, weights, cache, mae_gradient(pred, target), analytic);
    if (tamper_gradients) tamper_gradients(analytic);

    GradCheckReport report;
    report.tolerance = tolerance;
    std::vector<std::pair<std::string, std::vector<double>*>> wt, at;
    for_each_tensor(weights, [&](const char* n, std::vector<double>& t) { wt.emplace_back(n, &t); });
    for_each_tensor(analytic, [&](const char* n, std::vector<double>& t) { at.emplace_back(n, &t); });

    for (std::size_t k = 0; k < wt.size(); ++k) {
        GradCheckReport::Block block;
        block.name = wt[k].first;
        std::vector<double>& params = *wt[k].second;
        for (std::size_t j = 0; j < params.size(); ++j) {
            const double orig = params[j];
            params[j] = orig + fd_step;
            const double lp = std::abs(forward(cfg, weights, window) - target);
            params[j] = orig - fd_step;
            const double lm = std::abs(forward(cfg, weights, window) - target);
            params[j] = orig;
            const double numeric = (lp - lm) / (2.0 * fd_step);
            const double analytic_g = (*at[k].second)[j];
            const double denom = std::max(1e-8, std::abs(numeric) + std::abs(analytic_g));
            block.max_rel_error =
                std::max(block.max_rel_error, std::abs(numeric - analytic_g) / denom);
        }
        if (block.max_rel_error > report.max_rel_error) {
            report.max_rel_error = block.max_rel_error;
            report.worst_block = block.name;
        }
        report.blocks.push_back(std::move(block));
    }
    if (report.worst_block.empty() && !report.blocks.empty())
        report.worst_block = report.blocks.front().name;
    report.passed = report.max_rel_error < tolerance;
    return report;
}

} // namespace salesforecast

#endif

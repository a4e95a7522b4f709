#ifndef SALESFORECAST_BENCHMARK_HPP
#define SALESFORECAST_BENCHMARK_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include <sys/resource.h>
#include <sys/utsname.h>

#include "salesforecast/evaluation.hpp"
#include "salesforecast/model_io.hpp"
#include "salesforecast/prepared.hpp"
#include "salesforecast/training.hpp"

namespace salesforecast {

struct ModelSize {
    std::size_t bytes = 0;
    double kb = 0;           // bytes / 1024, exact
    std::size_t kb_display = 0; // truncated, as printed in size tables
};

/// float32 size arithmetic: bytes = params * 4.
inline ModelSize model_size(std::size_t params) {
    ModelSize s;
    s.bytes = params * 4;
    s.kb = static_cast<double>(s.bytes) / 1024.0;
    s.kb_display = s.bytes / 1024;
    return s;
}

inline double size_reduction_percent(std::size_t bytes, std::size_t baseline_bytes) {
    if (baseline_bytes == 0) return 0.0;
    return 100.0 * (1.0 - static_cast<double>(bytes) / static_cast<double>(baseline_bytes));
}

struct LatencyStats {
    double median_ms = 0;
    double mean_ms = 0;
    double p5_ms = 0;
    double p95_ms = 0;
    std::size_t reps = 0;
    std::size_t warmup = 0;
};

namespace detail {

inline double percentile(std::vector<double> sorted, double q) {
    const std::size_t idx =
        static_cast<std::size_t>(std::lround(q * static_cast<double>(sorted.size() - 1)));
    return sorted[idx];
}

} // namespace detail

/**
 * Single-prediction latency through a freshly loaded model file, so the
 * measurement exercises the serialized artifact. Warm-up calls are
 * untimed; stats come from a monotonic clock over `reps` batch-1 calls.
 */
inline LatencyStats measure_latency(const std::string& model_path, const Matrix& window,
                                    std::size_t warmup = 10, std::size_t reps = 100) {
    if (reps < 100) throw std::invalid_argument("measure_latency: reps must be >= 100");
    if (warmup < 10) throw std::invalid_argument("measure_latency: warmup must be >= 10");
    LoadedModel m = load_model(model_path);

    volatile double sink = 0;
    for (std::size_t k = 0; k < warmup; ++k) sink = forward(m.config, m.weights, window);

    std::vector<double> samples;
    samples.reserve(reps);
    for (std::size_t k = 0; k < reps; ++k) {
        const auto t0 = std::chrono::steady_clock::now();
        const double pred = forward(m.config, m.weights, window);
        const auto t1 = std::chrono::steady_clock::now();
        if (!std::isfinite(pred)) throw std::runtime_error("measure_latency: non-finite output");
        sink = pred;
        samples.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    (void)sink;

    std::sort(samples.begin(), samples.end());
    LatencyStats st;
    st.reps = reps;
    st.warmup = warmup;
    st.median_ms = detail::percentile(samples, 0.5);
    st.p5_ms = detail::percentile(samples, 0.05);
    st.p95_ms = detail::percentile(samples, 0.95);
    double sum = 0;
    for (double v : samples) sum += v;
    st.mean_ms = sum / static_cast<double>(samples.size());
    return st;
}

/**
 * Best-effort peak RSS of this process after running the latency workload.
 * This is implementation-process memory, not comparable to a deep-learning
 * framework's footprint. Returns nullopt where the platform can't say.
 */
inline std::optional<double> measure_memory_mb() {
    struct rusage ru;
    if (getrusage(RUSAGE_SELF, &ru) != 0) return std::nullopt;
    if (ru.ru_maxrss <= 0) return std::nullopt;
    return static_cast<double>(ru.ru_maxrss) / 1024.0; // Linux reports KB
}

inline std::string host_description() {
    struct utsname u;
    if (uname(&u) != 0) return "unknown";
    return std::string(u.sysname) + " " + u.release + " " + u.machine;
}

struct EfficiencyResult {
    std::size_t param_count = 0;
    std::size_t model_bytes = 0;
    double model_kb = 0;
    LatencyStats latency;
    std::optional<double> peak_rss_mb;
    double size_reduction_percent = 0;
};

struct SweepRow {
    std::size_t hidden_units = 0;
    EfficiencyResult efficiency;
    std::vector<double> mape_per_rep;
    std::vector<double> rmse_per_rep;
    double mape_mean = 0;
    double rmse_mean = 0;
    std::string model_file;
};

struct SweepTTest {
    std::size_t hidden_a = 0;
    std::size_t hidden_b = 0;
    TTestResult result;
};

struct SweepReport {
    std::vector<SweepRow> rows; // one per requested variant
    std::vector<SweepTTest> ttests;
    std::size_t baseline_hidden = 128;
    double naive_last_value_mape = 0;
    double seasonal_naive_mape = 0;
    bool u_shape_replicated = false; // 128-unit MAPE > 64-unit MAPE
    bool has_u_shape_pair = false;
    std::string ttest_note;
    nlohmann::json metadata;
};

/**
 * Naive baseline over the test windows: predict the target observed
 * `period` days earlier in the same series (1 = last value, 7 = seasonal),
 * scored in original sales units.
 */
inline double naive_baseline_mape(const std::vector<FeatureWindow>& all_windows,
                                  const IndexRange& test_range, const Scaler& scaler,
                                  std::int64_t period) {
    std::map<std::pair<SeriesKey, std::int64_t>, double> target_by_day;
    for (const auto& w : all_windows)
        target_by_day[{w.key, w.target_date.serial()}] =
            scaler.invert(Scaler::kTargetChannel, w.target);
    std::vector<double> actual, predicted;
    for (std::size_t i = test_range.begin; i < test_range.end; ++i) {
        const auto& w = all_windows[i];
        auto it = target_by_day.find({w.key, w.target_date.serial() - period});
        if (it == target_by_day.end()) continue;
        actual.push_back(scaler.invert(Scaler::kTargetChannel, w.target));
        predicted.push_back(it->second);
    }
    return mape(actual, predicted);
}

struct SweepOptions {
    std::vector<std::size_t> variants = {16, 32, 48, 64, 128};
    std::size_t repetitions = 5;
    std::size_t latency_warmup = 10;
    std::size_t latency_reps = 100;
};

/**
 * The full compression study: per variant, `repetitions` seeded trainings
 * and test evaluations; efficiency measured on the first run's serialized
 * model; paired t-tests for 64-vs-{128,32,16} when both sides exist.
 * Model files land in `out_dir`.
 */
inline SweepReport run_sweep(const PreparedData& data, const ModelConfig& base_cfg,
                             const TrainConfig& train_cfg, const SweepOptions& opts,
                             const std::filesystem::path& out_dir) {
    if (opts.variants.empty()) throw std::invalid_argument("run_sweep: no variants");
    if (opts.repetitions < 1) throw std::invalid_argument("run_sweep: repetitions must be >= 1");
    std::filesystem::create_directories(out_dir);

    SweepReport report;
    report.baseline_hidden =
        std::count(opts.variants.begin(), opts.variants.end(), std::size_t{128})
            ? 128
            : *std::max_element(opts.variants.begin(), opts.variants.end());
    report.naive_last_value_mape =
        naive_baseline_mape(data.windows, data.split.test, data.scaler, 1);
    report.seasonal_naive_mape =
        naive_baseline_mape(data.windows, data.split.test, data.scaler, 7);

    const auto train_set = data.train_windows();
    const auto test_set = data.test_windows();
    const std::size_t baseline_bytes =
        model_size(param_count({base_cfg.input_dim, base_cfg.seq_len, report.baseline_hidden,
                                base_cfg.dense_units, base_cfg.output_dim, base_cfg.dropout_rate}))
            .bytes;

    for (std::size_t h : opts.variants) {
        ModelConfig cfg = base_cfg;
        cfg.hidden_units = h;
        SweepRow row;
        row.hidden_units = h;

        for (std::size_t rep = 0; rep < opts.repetitions; ++rep) {
            TrainConfig tc = train_cfg;
            tc.seed = train_cfg.seed + rep;
            TrainRun run = train(cfg, tc, train_set);
            EvalResult ev = evaluate(cfg, run.weights, test_set, data.scaler);
            row.mape_per_rep.push_back(ev.mape_percent);
            row.rmse_per_rep.push_back(ev.rmse);
            if (rep == 0) {
                nlohmann::json meta;
                meta["seed"] = tc.seed;
                meta["epochs"] = tc.epochs;
                meta["batch_size"] = tc.batch_size;
                meta["learning_rate"] = tc.learning_rate;
                meta["data_hash"] = data.content_hash;
                const auto path = out_dir / ("model_h" + std::to_string(h) + ".tlsb");
                save_model(path.string(), cfg, run.weights, data.scaler, meta);
                row.model_file = path.string();
            }
        }
        for (double v : row.mape_per_rep) row.mape_mean += v;
        row.mape_mean /= static_cast<double>(row.mape_per_rep.size());
        for (double v : row.rmse_per_rep) row.rmse_mean += v;
        row.rmse_mean /= static_cast<double>(row.rmse_per_rep.size());

        row.efficiency.param_count = param_count(cfg);
        const ModelSize sz = model_size(row.efficiency.param_count);
        row.efficiency.model_bytes = sz.bytes;
        row.efficiency.model_kb = sz.kb;
        row.efficiency.size_reduction_percent = size_reduction_percent(sz.bytes, baseline_bytes);
        row.efficiency.latency = measure_latency(row.model_file, test_set.front().inputs,
                                                 opts.latency_warmup, opts.latency_reps);
        row.efficiency.peak_rss_mb = measure_memory_mb();
        report.rows.push_back(std::move(row));
    }

    auto find_row = [&](std::size_t h) -> const SweepRow* {
        for (const auto& r : report.rows)
            if (r.hidden_units == h) return &r;
        return nullptr;
    };
    if (opts.repetitions >= 2) {
        for (std::size_t other : {std::size_t{128}, std::size_t{32}, std::size_t{16}}) {
            const SweepRow* a = find_row(64);
            const SweepRow* b = find_row(other);
            if (a && b)
                report.ttests.push_back({64, other, paired_ttest(a->mape_per_rep, b->mape_per_rep)});
        }
    } else {
        report.ttest_note = "insufficient repetitions (need >= 2 for paired t-tests)";
    }
    if (const SweepRow* r128 = find_row(128)) {
        if (const SweepRow* r64 = find_row(64)) {
            report.has_u_shape_pair = true;
            report.u_shape_replicated = r128->mape_mean > r64->mape_mean;
        }
    }

    report.metadata["base_seed"] = train_cfg.seed;
    report.metadata["repetitions"] = opts.repetitions;
    report.metadata["epochs"] = train_cfg.epochs;
    report.metadata["batch_size"] = train_cfg.batch_size;
    report.metadata["learning_rate"] = train_cfg.learning_rate;
    report.metadata["data_hash"] = data.content_hash;
    report.metadata["host"] = host_description();
    return report;
}

inline nlohmann::json sweep_report_to_json(const SweepReport& r) {
    nlohmann::json j;
    j["baseline_hidden"] = r.baseline_hidden;
    j["naive_last_value_mape"] = r.naive_last_value_mape;
    j["seasonal_naive_mape"] = r.seasonal_naive_mape;
    if (r.has_u_shape_pair) j["u_shape_replicated"] = r.u_shape_replicated;
    if (!r.ttest_note.empty()) j["ttest_note"] = r.ttest_note;
    j["metadata"] = r.metadata;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows) {
        nlohmann::json rj;
        rj["hidden_units"] = row.hidden_units;
        rj["param_count"] = row.efficiency.param_count;
        rj["model_bytes"] = row.efficiency.model_bytes;
        rj["model_kb"] = row.efficiency.model_kb;
        rj["size_reduction_percent"] = row.efficiency.size_reduction_percent;
        rj["mape_percent"] = row.mape_mean;
        rj["rmse"] = row.rmse_mean;
        rj["mape_per_rep"] = row.mape_per_rep;
        rj["rmse_per_rep"] = row.rmse_per_rep;
        rj["latency_median_ms"] = row.efficiency.latency.median_ms;
        rj["latency_mean_ms"] = row.efficiency.latency.mean_ms;
        rj["latency_p5_ms"] = row.efficiency.latency.p5_ms;
        rj["latency_p95_ms"] = row.efficiency.latency.p95_ms;
        if (row.efficiency.peak_rss_mb)
            rj["peak_rss_mb"] = *row.efficiency.peak_rss_mb;
        else
            rj["peak_rss_mb"] = "unavailable";
        rj["model_file"] = row.model_file;
        rows.push_back(std::move(rj));
    }
    j["rows"] = rows;
    nlohmann::json tt = nlohmann::json::array();
    for (const auto& t : r.ttests) {
        tt.push_back({{"hidden_a", t.hidden_a},
                      {"hidden_b", t.hidden_b},
                      {"t_statistic", t.result.t_statistic},
                      {"p_value", t.result.p_value},
                      {"degrees_of_freedom", t.result.degrees_of_freedom},
                      {"mean_difference", t.result.mean_difference},
                      {"zero_variance", t.result.zero_variance}});
    }
    j["ttests"] = tt;
    return j;
}

/// Write sweep_report.json, table1.csv, table3.csv, both figure CSVs and
/// report.md into `dir`. Deterministic given the report.
inline void emit_report(const SweepReport& r, const std::filesystem::path& dir) {
    if (r.rows.empty()) throw std::invalid_argument("emit_report: empty report");
    std::filesystem::create_directories(dir);
    char buf[128];

    {
        std::ofstream f(dir / "sweep_report.json");
        f << sweep_report_to_json(r).dump(2) << '\n';
    }
    {
        std::ofstream f(dir / "table1.csv");
        f << "model,hidden_units,params,mape_percent,rmse,size_kb\n";
        for (const auto& row : r.rows) {
            std::snprintf(buf, sizeof(buf), "LSTM-%zu,%zu,%zu,%.4f,%.4f,%zu\n", row.hidden_units,
                          row.hidden_units, row.efficiency.param_count, row.mape_mean,
                          row.rmse_mean, model_size(row.efficiency.param_count).kb_display);
            f << buf;
        }
    }
    {
        std::ofstream f(dir / "table3.csv");
        f << "model,inference_median_ms,inference_mean_ms,memory_mb,size_reduction_percent\n";
        for (const auto& row : r.rows) {
            std::string mem = row.efficiency.peak_rss_mb
                                  ? (std::snprintf(buf, sizeof(buf), "%.1f",
                                                   *row.efficiency.peak_rss_mb),
                                     std::string(buf))
                                  : std::string("unavailable");
            std::snprintf(buf, sizeof(buf), "LSTM-%zu,%.4f,%.4f,", row.hidden_units,
                          row.efficiency.latency.median_ms, row.efficiency.latency.mean_ms);
            f << buf << mem;
            std::snprintf(buf, sizeof(buf), ",%.1f\n", row.efficiency.size_reduction_percent);
            f << buf;
        }
    }
    for (const char* name : {"fig_error_vs_size.csv", "fig_tradeoff.csv"}) {
        std::ofstream f(dir / name);
        f << "hidden_units,param_count,size_kb,mape,rmse,latency_ms\n";
        for (const auto& row : r.rows) {
            std::snprintf(buf, sizeof(buf), "%zu,%zu,%.4f,%.4f,%.4f,%.4f\n", row.hidden_units,
                          row.efficiency.param_count, row.efficiency.model_kb, row.mape_mean,
                          row.rmse_mean, row.efficiency.latency.median_ms);
            f << buf;
        }
    }
    {
        std::ofstream f(dir / "report.md");
        f << "# Compression sweep report\n\n";
        f << "Naive last-value baseline MAPE: ";
        std::snprintf(buf, sizeof(buf), "%.2f%%\n", r.naive_last_value_mape);
        f << buf << "Seasonal-naive (lag-7) baseline MAPE: ";
        std::snprintf(buf, sizeof(buf), "%.2f%%\n\n", r.seasonal_naive_mape);
        f << buf;
        f << "| Model | Hidden Units | Params | MAPE (%) | RMSE | Size (KB) |\n";
        f << "|---|---|---|---|---|---|\n";
        for (const auto& row : r.rows) {
            std::snprintf(buf, sizeof(buf), "| LSTM-%zu | %zu | %zu | %.2f | %.3f | %zu |\n",
                          row.hidden_units, row.hidden_units, row.efficiency.param_count,
                          row.mape_mean, row.rmse_mean,
                          model_size(row.efficiency.param_count).kb_display);
            f << buf;
        }
        f << "\n## Efficiency\n\n";
        f << "| Model | Median latency (ms) | Mean latency (ms) | Peak RSS (MB) | Size reduction |\n";
        f << "|---|---|---|---|---|\n";
        for (const auto& row : r.rows) {
            std::string mem = row.efficiency.peak_rss_mb
                                  ? (std::snprintf(buf, sizeof(buf), "%.1f",
                                                   *row.efficiency.peak_rss_mb),
                                     std::string(buf))
                                  : std::string("unavailable");
            std::snprintf(buf, sizeof(buf), "| LSTM-%zu | %.4f | %.4f | %s | %.1f%% |\n",
                          row.hidden_units, row.efficiency.latency.median_ms,
                          row.efficiency.latency.mean_ms, mem.c_str(),
                          row.efficiency.size_reduction_percent);
            f << buf;
        }
        if (r.has_u_shape_pair) {
            f << "\nU-shape (128-unit MAPE > 64-unit MAPE): "
              << (r.u_shape_replicated ? "replicated" : "not replicated") << "\n";
        }
        if (!r.ttests.empty()) {
            f << "\n## Paired t-tests (per-rep MAPE)\n\n";
            f << "| Pair | t | p | df |\n|---|---|---|---|\n";
            for (const auto& t : r.ttests) {
                std::snprintf(buf, sizeof(buf), "| LSTM-%zu vs LSTM-%zu | %.3f | %.4f | %zu |\n",
                              t.hidden_a, t.hidden_b, t.result.t_statistic, t.result.p_value,
                              t.result.degrees_of_freedom);
                f << buf;
            }
        } else if (!r.ttest_note.empty()) {
            f << "\nt-tests omitted: " << r.ttest_note << "\n";
        }
    }
}

} // namespace salesforecast

#endif

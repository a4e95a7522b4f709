// forecast: end-to-end CLI for the LSTM compression study.
// Subcommands: prepare, train, evaluate, sweep, gradcheck, bench-latency.
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "salesforecast/benchmark.hpp"
#include "salesforecast/dataset.hpp"
#include "salesforecast/evaluation.hpp"
#include "salesforecast/features.hpp"
#include "salesforecast/model_io.hpp"
#include "salesforecast/nn.hpp"
#include "salesforecast/prepared.hpp"
#include "salesforecast/training.hpp"

namespace sf = salesforecast;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "1.0.0";
const std::set<std::size_t> kStandardHidden = {16, 32, 48, 64, 128};

std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

json make_manifest(const std::string& subcommand, const json& flags, std::uint64_t seed,
                   const std::string& data_fingerprint) {
    json m;
    m["subcommand"] = subcommand;
    m["flags"] = flags;
    m["base_seed"] = seed;
    m["data_fingerprint"] = data_fingerprint;
    m["tool_version"] = kToolVersion;
    m["host"] = sf::host_description();
    m["timestamp"] = iso_timestamp();
    return m;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream f(path);
    if (!f) throw sf::DataError("cannot write '" + path.string() + "'");
    f << j.dump(2) << '\n';
}

struct PrepareArgs {
    std::string input_csv;
    bool synthetic = false;
    int syn_days = 800;
    int syn_series = 1;
    double syn_base = 50.0;
    double syn_weekly = 10.0;
    double syn_yearly = 0.0;
    double syn_trend = 0.0;
    double syn_noise = 0.0;
    std::string fill_policy = "reject";
    double train_fraction = 0.8;
    std::size_t cv = 0;
    std::uint64_t seed = 1;
    std::string out_dir;
};

int cmd_prepare(const PrepareArgs& a) {
    sf::SeriesMap series;
    json source;
    if (a.synthetic) {
        for (int s = 0; s < a.syn_series; ++s) {
            sf::SyntheticSpec spec;
            spec.n_days = a.syn_days;
            spec.base_level = a.syn_base;
            spec.weekly_amplitude = a.syn_weekly;
            spec.yearly_amplitude = a.syn_yearly;
            spec.trend_per_day = a.syn_trend;
            spec.noise_std = a.syn_noise;
            spec.seed = a.seed + static_cast<std::uint64_t>(s);
            spec.store = s + 1;
            spec.item = 1;
            series[{spec.store, spec.item}] = sf::generate_synthetic(spec);
        }
        source = {{"type", "synthetic"},     {"n_days", a.syn_days},
                  {"n_series", a.syn_series}, {"base_level", a.syn_base},
                  {"weekly_amplitude", a.syn_weekly}, {"yearly_amplitude", a.syn_yearly},
                  {"trend_per_day", a.syn_trend},     {"noise_std", a.syn_noise},
                  {"seed", a.seed}};
    } else {
        const sf::FillPolicy policy =
            a.fill_policy == "zero_fill" ? sf::FillPolicy::zero_fill : sf::FillPolicy::reject_gaps;
        std::size_t total = 0;
        series = sf::load_csv(a.input_csv, policy, &total);
        std::fprintf(stderr, "loaded %zu records across %zu series\n", total, series.size());
        source = {{"type", "csv"}, {"path", a.input_csv}, {"fill_policy", a.fill_policy},
                  {"records", total}, {"series", series.size()}};
    }

    std::vector<sf::FeatureWindow> windows;
    for (const auto& [key, recs] : series) {
        auto w = sf::build_windows(recs);
        windows.insert(windows.end(), std::make_move_iterator(w.begin()),
                       std::make_move_iterator(w.end()));
    }
    std::stable_sort(windows.begin(), windows.end(),
                     [](const sf::FeatureWindow& x, const sf::FeatureWindow& y) {
                         const auto sx = x.target_date.serial(), sy = y.target_date.serial();
                         if (sx != sy) return sx < sy;
                         return x.key < y.key;
                     });

    sf::SplitPlan split = sf::temporal_split(windows.size(), a.train_fraction);
    if (a.cv >= 2) split.cv = sf::cv_folds(split.train.size(), a.cv);

    std::vector<sf::FeatureWindow> train_raw(windows.begin() + split.train.begin,
                                             windows.begin() + split.train.end);
    sf::Scaler scaler = sf::fit_scaler(train_raw);
    auto normalized = sf::apply_scaler(scaler, windows);

    json meta;
    meta["source"] = source;
    meta["train_fraction"] = a.train_fraction;
    meta["window_count"] = windows.size();
    sf::write_prepared(a.out_dir, normalized, scaler, split, meta);

    const std::string hash = sf::prepared_content_hash(a.out_dir);
    json flags = {{"train_fraction", a.train_fraction}, {"cv", a.cv}, {"source", source}};
    write_json(fs::path(a.out_dir) / "manifest.json",
               make_manifest("prepare", flags, a.seed, hash));
    std::fprintf(stderr, "prepared %zu windows (train %zu, test %zu) -> %s [hash %s]\n",
                 windows.size(), split.train.size(), split.test.size(), a.out_dir.c_str(),
                 hash.c_str());
    return 0;
}

struct TrainArgs {
    std::string prepared_dir;
    std::size_t hidden = 64;
    bool allow_any_hidden = false;
    std::size_t epochs = 30;
    std::size_t batch_size = 64;
    double learning_rate = 1e-3;
    double dropout = 0.2;
    std::uint64_t seed = 1;
    int store = 0, item = 0; // optional per-series filter
    std::string out_model;
};

int cmd_train(const TrainArgs& a) {
    sf::PreparedData data = sf::read_prepared(a.prepared_dir);
    sf::ModelConfig cfg;
    cfg.hidden_units = a.hidden;
    cfg.dropout_rate = a.dropout;
    cfg.validate();

    sf::TrainConfig tc;
    tc.epochs = a.epochs;
    tc.batch_size = a.batch_size;
    tc.learning_rate = a.learning_rate;
    tc.seed = a.seed;
    tc.mode = (a.store || a.item) ? sf::TrainMode::per_series : sf::TrainMode::global;

    auto train_set = data.train_windows();
    if (a.store || a.item) {
        std::erase_if(train_set, [&](const sf::FeatureWindow& w) {
            return (a.store && w.key.store != a.store) || (a.item && w.key.item != a.item);
        });
    }
    sf::TrainRun run = sf::train(cfg, tc, train_set);

    json meta;
    meta["seed"] = tc.seed;
    meta["epochs"] = tc.epochs;
    meta["batch_size"] = tc.batch_size;
    meta["learning_rate"] = tc.learning_rate;
    meta["mode"] = tc.mode == sf::TrainMode::global ? "global" : "per_series";
    meta["data_hash"] = data.content_hash;
    meta["train_loss"] = run.train_loss;
    sf::save_model(a.out_model, cfg, run.weights, data.scaler, meta);

    json log = meta;
    log["hidden_units"] = a.hidden;
    log["dropout_rate"] = a.dropout;
    log["wall_seconds"] = run.wall_seconds;
    log["model_file"] = a.out_model;
    log["manifest"] = make_manifest("train", {{"hidden", a.hidden}, {"seed", a.seed}},
                                    a.seed, data.content_hash);
    write_json(a.out_model + ".log.json", log);
    std::fprintf(stderr, "trained LSTM-%zu: final train MAE %.6f (normalized), %.1fs -> %s\n",
                 a.hidden, run.train_loss.back(), run.wall_seconds, a.out_model.c_str());
    return 0;
}

struct EvaluateArgs {
    std::string model_file;
    std::string prepared_dir;
    std::string out_json;
    std::string residual_csv;
    bool allow_hash_mismatch = false;
};

int cmd_evaluate(const EvaluateArgs& a) {
    sf::LoadedModel model = sf::load_model(a.model_file);
    sf::PreparedData data = sf::read_prepared(a.prepared_dir);

    const std::string model_hash = model.meta.value("data_hash", "");
    if (!a.allow_hash_mismatch && model_hash != data.content_hash)
        throw sf::DataError("scaler/data mismatch: model was trained on data hash '" + model_hash +
                            "' but prepared dir has '" + data.content_hash +
                            "' (pass --allow-hash-mismatch to override)");

    sf::EvalResult ev =
        sf::evaluate(model.config, model.weights, data.test_windows(), data.scaler);

    json out;
    out["mape_percent"] = ev.mape_percent;
    out["rmse"] = ev.rmse;
    out["n_samples"] = ev.n_samples;
    out["zero_policy"] = "exclude";
    out["units"] = "original sales units";
    out["model_file"] = a.model_file;
    out["data_hash"] = data.content_hash;
    if (!a.out_json.empty())
        write_json(a.out_json, out);
    else
        std::cout << out.dump(2) << '\n';

    if (!a.residual_csv.empty()) {
        std::ofstream f(a.residual_csv);
        if (!f) throw sf::DataError("cannot write '" + a.residual_csv + "'");
        f << "target_date,actual,predicted\n";
        char buf[80];
        for (const auto& r : ev.residuals) {
            std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g\n", r.target_date.to_string().c_str(),
                          r.actual, r.predicted);
            f << buf;
        }
    }
    return 0;
}

struct SweepArgs {
    std::string prepared_dir;
    std::vector<std::size_t> variants = {16, 32, 48, 64, 128};
    std::size_t reps = 5;
    std::size_t epochs = 30;
    std::size_t batch_size = 64;
    double learning_rate = 1e-3;
    std::uint64_t seed = 1;
    std::size_t latency_reps = 100;
    std::string out_dir;
};

int cmd_sweep(const SweepArgs& a) {
    sf::PreparedData data = sf::read_prepared(a.prepared_dir);
    sf::ModelConfig base;
    sf::TrainConfig tc;
    tc.epochs = a.epochs;
    tc.batch_size = a.batch_size;
    tc.learning_rate = a.learning_rate;
    tc.seed = a.seed;
    sf::SweepOptions opts;
    opts.variants = a.variants;
    opts.repetitions = a.reps;
    opts.latency_reps = a.latency_reps;

    const auto t0 = std::chrono::steady_clock::now();
    sf::SweepReport report = sf::run_sweep(data, base, tc, opts, a.out_dir);
    report.metadata["wall_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.metadata["manifest"] =
        make_manifest("sweep", {{"variants", a.variants}, {"reps", a.reps}}, a.seed,
                      data.content_hash);
    sf::emit_report(report, a.out_dir);
    std::fprintf(stderr, "sweep complete: %zu variants, reports in %s\n", report.rows.size(),
                 a.out_dir.c_str());
    return 0;
}

struct GradcheckArgs {
    std::size_t hidden = 4;
    std::size_t seq = 5;
    double tol = 1e-4;
    std::uint64_t seed = 1;
};

int cmd_gradcheck(const GradcheckArgs& a) {
    sf::ModelConfig cfg;
    cfg.hidden_units = a.hidden;
    cfg.seq_len = a.seq;
    cfg.dropout_rate = 0.0;
    sf::GradCheckReport report = sf::grad_check(cfg, a.seed, a.tol);
    for (const auto& b : report.blocks)
        std::printf("%-10s max relative error %.3e\n", b.name.c_str(), b.max_rel_error);
    std::printf("worst block: %s (%.3e), tolerance %.1e -> %s\n", report.worst_block.c_str(),
                report.max_rel_error, report.tolerance, report.passed ? "PASS" : "FAIL");
    return report.passed ? 0 : 3;
}

struct BenchLatencyArgs {
    std::string model_file;
    std::string prepared_dir;
    std::size_t warmup = 10;
    std::size_t reps = 1000;
    std::string out_json;
};

int cmd_bench_latency(const BenchLatencyArgs& a) {
    sf::LoadedModel model = sf::load_model(a.model_file);
    sf::Matrix window;
    if (!a.prepared_dir.empty()) {
        sf::PreparedData data = sf::read_prepared(a.prepared_dir);
        auto test = data.test_windows();
        if (test.empty()) throw sf::DataError("prepared dir has no test windows");
        window = test.front().inputs;
    } else {
        window = sf::Matrix(model.config.seq_len, model.config.input_dim, 0.5);
    }
    sf::LatencyStats st = sf::measure_latency(a.model_file, window, a.warmup, a.reps);
    json out;
    out["median_ms"] = st.median_ms;
    out["mean_ms"] = st.mean_ms;
    out["p5_ms"] = st.p5_ms;
    out["p95_ms"] = st.p95_ms;
    out["reps"] = st.reps;
    out["warmup"] = st.warmup;
    out["hidden_units"] = model.config.hidden_units;
    auto mem = sf::measure_memory_mb();
    if (mem)
        out["peak_rss_mb"] = *mem;
    else
        out["peak_rss_mb"] = "unavailable";
    if (!a.out_json.empty())
        write_json(a.out_json, out);
    else
        std::cout << out.dump(2) << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"LSTM retail-sales forecasting and compression-sweep harness"};
    app.set_version_flag("--version", kToolVersion);
    app.set_config("--config");
    app.require_subcommand(1);

    PrepareArgs pa;
    auto* prep = app.add_subcommand("prepare", "build windows, scaler and split from a data source");
    prep->add_option("--input", pa.input_csv, "sales CSV (date,store,item,sales)");
    prep->add_flag("--synthetic", pa.synthetic, "generate a synthetic dataset instead");
    prep->add_option("--days", pa.syn_days, "synthetic: days per series");
    prep->add_option("--series", pa.syn_series, "synthetic: number of series");
    prep->add_option("--base", pa.syn_base, "synthetic: base level");
    prep->add_option("--weekly-amp", pa.syn_weekly, "synthetic: weekly amplitude");
    prep->add_option("--yearly-amp", pa.syn_yearly, "synthetic: yearly amplitude");
    prep->add_option("--trend", pa.syn_trend, "synthetic: trend per day");
    prep->add_option("--noise", pa.syn_noise, "synthetic: noise std");
    prep->add_option("--fill-policy", pa.fill_policy, "reject | zero_fill")
        ->check(CLI::IsMember({"reject", "zero_fill"}));
    prep->add_option("--train-fraction", pa.train_fraction, "temporal split fraction");
    prep->add_option("--cv-folds", pa.cv, "expanding-window CV fold count (0 = none)");
    prep->add_option("--seed", pa.seed, "base seed");
    prep->add_option("--out", pa.out_dir, "output directory")->required();

    TrainArgs ta;
    auto* tr = app.add_subcommand("train", "train one LSTM variant on prepared data");
    tr->add_option("--prepared", ta.prepared_dir, "prepared data directory")->required();
    tr->add_option("--hidden", ta.hidden, "hidden units");
    tr->add_flag("--allow-any-hidden", ta.allow_any_hidden, "accept non-standard sizes");
    tr->add_option("--epochs", ta.epochs, "training epochs");
    tr->add_option("--batch", ta.batch_size, "batch size");
    tr->add_option("--lr", ta.learning_rate, "Adam learning rate");
    tr->add_option("--dropout", ta.dropout, "dropout rate");
    tr->add_option("--seed", ta.seed, "seed");
    tr->add_option("--store", ta.store, "per-series: restrict to this store");
    tr->add_option("--item", ta.item, "per-series: restrict to this item");
    tr->add_option("--out", ta.out_model, "output model file")->required();

    EvaluateArgs ea;
    auto* ev = app.add_subcommand("evaluate", "score a model on the prepared test split");
    ev->add_option("--model", ea.model_file, "model file")->required();
    ev->add_option("--prepared", ea.prepared_dir, "prepared data directory")->required();
    ev->add_option("--out", ea.out_json, "metrics JSON (default: stdout)");
    ev->add_option("--residuals", ea.residual_csv, "per-sample residual CSV");
    ev->add_flag("--allow-hash-mismatch", ea.allow_hash_mismatch,
                 "skip the prepared-data hash check");

    SweepArgs sa;
    auto* sw = app.add_subcommand("sweep", "run the full compression sweep");
    sw->add_option("--prepared", sa.prepared_dir, "prepared data directory")->required();
    sw->add_option("--variants", sa.variants, "hidden-unit variants");
    sw->add_option("--reps", sa.reps, "training repetitions per variant");
    sw->add_option("--epochs", sa.epochs, "training epochs");
    sw->add_option("--batch", sa.batch_size, "batch size");
    sw->add_option("--lr", sa.learning_rate, "Adam learning rate");
    sw->add_option("--seed", sa.seed, "base seed");
    sw->add_option("--latency-reps", sa.latency_reps, "latency repetitions per variant");
    sw->add_option("--out", sa.out_dir, "output directory")->required();

    GradcheckArgs ga;
    auto* gc = app.add_subcommand("gradcheck", "analytic vs finite-difference gradients");
    gc->add_option("--hidden", ga.hidden, "hidden units (<= 16)");
    gc->add_option("--seq", ga.seq, "sequence length (<= 16)");
    gc->add_option("--tol", ga.tol, "max relative error tolerance");
    gc->add_option("--seed", ga.seed, "seed");

    BenchLatencyArgs ba;
    auto* bl = app.add_subcommand("bench-latency", "single-prediction latency of a model file");
    bl->add_option("--model", ba.model_file, "model file")->required();
    bl->add_option("--prepared", ba.prepared_dir, "prepared dir (first test window as input)");
    bl->add_option("--warmup", ba.warmup, "untimed warm-up calls");
    bl->add_option("--reps", ba.reps, "timed repetitions");
    bl->add_option("--out", ba.out_json, "stats JSON (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (prep->parsed()) {
            if (!pa.synthetic && pa.input_csv.empty()) {
                std::fprintf(stderr, "error: provide --input CSV or --synthetic\n");
                return 1;
            }
            return cmd_prepare(pa);
        }
        if (tr->parsed()) {
            if (!ta.allow_any_hidden && !kStandardHidden.count(ta.hidden)) {
                std::fprintf(stderr,
                             "error: --hidden %zu is not one of {16, 32, 48, 64, 128}; "
                             "pass --allow-any-hidden to override\n",
                             ta.hidden);
                return 1;
            }
            return cmd_train(ta);
        }
        if (ev->parsed()) return cmd_evaluate(ea);
        if (sw->parsed()) return cmd_sweep(sa);
        if (gc->parsed()) {
            if (ga.hidden > 16 || ga.seq > 16) {
                std::fprintf(stderr, "error: gradcheck caps are --hidden <= 16, --seq <= 16\n");
                return 1;
            }
            return cmd_gradcheck(ga);
        }
        if (bl->parsed()) return cmd_bench_latency(ba);
    } catch (const sf::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const sf::ModelIoError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const sf::TrainingError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 1;
}

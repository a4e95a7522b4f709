// Acceptance suite: nine end-to-end criteria for the forecasting engine and
// compression-study harness. Each criterion prints a single PASS/FAIL line;
// the process exits nonzero if any criterion fails.
//
// Criterion 4 runs against the retail CSV named by the SALES_CSV environment
// variable when present; otherwise it falls back to a synthetic dataset with
// the same shape and notes the substitution.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

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

namespace {

int g_failures = 0;

void report(int criterion, const char* title, bool ok, const std::string& detail) {
    std::printf("criterion %d (%s): %s — %s\n", criterion, title, ok ? "PASS" : "FAIL",
                detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(FORECAST_BIN) + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name) {
    fs::path d = fs::temp_directory_path() / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

sf::PreparedData prepare_series(const sf::SeriesMap& series, const std::string& dir_name,
                                double train_fraction = 0.8) {
    std::vector<sf::FeatureWindow> windows;
    for (const auto& [key, recs] : series) {
        auto w = sf::build_windows(recs);
        windows.insert(windows.end(), w.begin(), w.end());
    }
    std::stable_sort(windows.begin(), windows.end(),
                     [](const sf::FeatureWindow& x, const sf::FeatureWindow& y) {
                         const auto sx = x.target_date.serial(), sy = y.target_date.serial();
                         if (sx != sy) return sx < sy;
                         return x.key < y.key;
                     });
    sf::SplitPlan split = sf::temporal_split(windows.size(), train_fraction);
    std::vector<sf::FeatureWindow> train_raw(windows.begin() + split.train.begin,
                                             windows.begin() + split.train.end);
    sf::Scaler scaler = sf::fit_scaler(train_raw);
    auto normalized = sf::apply_scaler(scaler, windows);
    fs::path dir = fresh_dir(dir_name);
    sf::write_prepared(dir, normalized, scaler, split, nlohmann::json::object());
    return sf::read_prepared(dir);
}

// --- criterion 1: parameter/size arithmetic ------------------------------

void criterion_1() {
    bool ok = true;
    std::ostringstream d;

    sf::ModelConfig cfg;
    cfg.hidden_units = 32;
    ok &= sf::param_count(cfg) == 5665;
    d << "param_count(h=32)=" << sf::param_count(cfg);

    // the published size column follows from count * 4 bytes with KB floored
    const std::size_t published_counts[] = {71809, 19521, 11569, 5665, 1857};
    const std::size_t published_kb[] = {280, 76, 45, 22, 7};
    for (int i = 0; i < 5; ++i)
        ok &= sf::model_size(published_counts[i]).kb_display == published_kb[i];
    d << ", size column reproduced (280/76/45/22/7 KB)";

    const double red = sf::size_reduction_percent(sf::model_size(19521).bytes,
                                                  sf::model_size(71809).bytes);
    ok &= std::lround(red) == 73;
    d << ", h=64 size reduction " << std::lround(red) << "%";
    report(1, "parameter/size arithmetic", ok, d.str());
}

// --- criterion 2: gradient correctness across 10 seeds --------------------

void criterion_2() {
    bool ok = true;
    double worst = 0;
    sf::ModelConfig cfg;
    cfg.hidden_units = 4;
    cfg.seq_len = 5;
    cfg.dropout_rate = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        sf::GradCheckReport r = sf::grad_check(cfg, seed, 1e-4);
        ok &= r.passed;
        worst = std::max(worst, r.max_rel_error);
    }
    std::ostringstream d;
    d << "h=4 seq=5, 10 seeds, worst relative error " << worst << " (tolerance 1e-4)";
    report(2, "gradient correctness", ok, d.str());
}

// --- criterion 3: learning sanity vs an independent seasonal-naive oracle -

void criterion_3() {
    // Noiseless synthetic series: weekly amplitude 10, base 50, 800 days.
    // A yearly component and mild trend are added so the lag-7 baseline is
    // imperfect (a purely weekly series makes it exact, leaving nothing to
    // beat); dropout is disabled because the data is noiseless.
    sf::SyntheticSpec spec;
    spec.n_days = 800;
    spec.base_level = 50;
    spec.weekly_amplitude = 10;
    spec.yearly_amplitude = 25;
    spec.trend_per_day = 0.05;
    spec.noise_std = 0.0;
    spec.seed = 11;
    const std::vector<sf::SalesRecord> raw = sf::generate_synthetic(spec);

    auto windows = sf::build_windows(raw);
    sf::SplitPlan split = sf::temporal_split(windows.size(), 0.8);
    std::vector<sf::FeatureWindow> train_raw(windows.begin() + split.train.begin,
                                             windows.begin() + split.train.end);
    sf::Scaler scaler = sf::fit_scaler(train_raw);
    auto normalized = sf::apply_scaler(scaler, windows);

    sf::ModelConfig cfg;
    cfg.hidden_units = 16;
    cfg.dropout_rate = 0.0;
    sf::TrainConfig tc; // 30 epochs, batch 64, Adam — the study's protocol
    tc.learning_rate = 1e-2;
    tc.seed = 2;
    std::vector<sf::FeatureWindow> train_set(normalized.begin() + split.train.begin,
                                             normalized.begin() + split.train.end);
    sf::TrainRun run = sf::train(cfg, tc, train_set);
    std::vector<sf::FeatureWindow> test_set(normalized.begin() + split.test.begin,
                                            normalized.begin() + split.test.end);
    sf::EvalResult ev = sf::evaluate(cfg, run.weights, test_set, scaler);

    // independent oracle: walk the raw series and predict sales[t-7]
    double ape_sum = 0;
    std::size_t n = 0;
    for (std::size_t i = split.test.begin; i < split.test.end; ++i) {
        const std::int64_t day = windows[i].target_date.serial();
        const std::int64_t offset = day - raw.front().date.serial();
        const double actual = static_cast<double>(raw[offset].sales);
        const double naive = static_cast<double>(raw[offset - 7].sales);
        if (actual == 0.0) continue;
        ape_sum += std::abs(actual - naive) / std::abs(actual);
        ++n;
    }
    const double naive_mape = 100.0 * ape_sum / static_cast<double>(n);

    std::ostringstream d;
    d << "LSTM-16 test MAPE " << ev.mape_percent << "% vs seasonal-naive oracle " << naive_mape
      << "%";
    report(3, "learning sanity", ev.mape_percent < naive_mape, d.str());
}

// --- criterion 4: full sweep completes and beats the naive baseline -------

void criterion_4() {
    const char* csv = std::getenv("SALES_CSV");
    sf::SeriesMap series;
    std::string source;
    sf::TrainConfig tc;
    tc.seed = 1;
    if (csv && fs::exists(csv)) {
        series = sf::load_csv(csv, sf::FillPolicy::reject_gaps);
        source = std::string("retail CSV ") + csv;
    } else {
        // fallback: synthetic data with the retail shape (the published
        // accuracy numbers are explicitly out of scope either way)
        for (int s = 1; s <= 2; ++s) {
            sf::SyntheticSpec spec;
            spec.n_days = 150;
            spec.base_level = 40.0 + 10.0 * s;
            spec.weekly_amplitude = 8;
            spec.yearly_amplitude = 15;
            spec.noise_std = 1.0;
            spec.seed = 20 + static_cast<std::uint64_t>(s);
            spec.store = s;
            series[{s, 1}] = sf::generate_synthetic(spec);
        }
        source = "synthetic fallback (no SALES_CSV supplied)";
        tc.epochs = 12;
        tc.batch_size = 16;
        tc.learning_rate = 1e-2;
    }

    sf::PreparedData data = prepare_series(series, "sf_acc_sweep_data");
    sf::SweepOptions opts;
    opts.variants = {16, 32, 48, 64, 128};
    opts.repetitions = 2;
    sf::ModelConfig base;
    base.dropout_rate = 0.2;
    fs::path out = fresh_dir("sf_acc_sweep_out");

    const auto t0 = std::chrono::steady_clock::now();
    sf::SweepReport rep = sf::run_sweep(data, base, tc, opts, out);
    sf::emit_report(rep, out);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    bool ok = rep.rows.size() == 5;
    double worst_mape = 0;
    for (const auto& row : rep.rows) {
        ok &= row.mape_mean < rep.naive_last_value_mape;
        worst_mape = std::max(worst_mape, row.mape_mean);
        sf::ModelConfig cfg;
        cfg.hidden_units = row.hidden_units;
        ok &= row.efficiency.param_count == sf::param_count(cfg);
    }
    ok &= rep.has_u_shape_pair; // the 128-vs-64 comparison must be reported
    ok &= fs::exists(out / "sweep_report.json") && fs::exists(out / "report.md");

    std::ostringstream d;
    d << source << "; 5 variants x 2 reps in " << wall << "s, worst variant MAPE " << worst_mape
      << "% vs naive last-value " << rep.naive_last_value_mape << "%, U-shape (128 worse than 64) "
      << (rep.u_shape_replicated ? "replicated" : "not replicated");
    report(4, "sweep completes and beats naive baseline", ok, d.str());
}

// --- criterion 5: statistics oracle ---------------------------------------

void criterion_5() {
    bool ok = true;
    std::ostringstream d;

    sf::TTestResult r = sf::paired_ttest({1, 2, 3, 4, 5}, {0, 0, 0, 0, 0});
    ok &= std::abs(r.t_statistic - 4.2426) <= 1e-4;
    ok &= std::abs(r.p_value - 0.0132) <= 1e-4;
    ok &= r.degrees_of_freedom == 4;
    d << "paired t on d=[1..5]: t=" << r.t_statistic << ", p=" << r.p_value << " (df 4)";

    const double p216 = sf::student_t_two_sided_p(2.16, 4);
    const double p123 = sf::student_t_two_sided_p(1.23, 4);
    ok &= p216 >= 0.096 && p216 <= 0.097;
    ok &= p123 >= 0.286 && p123 <= 0.287;
    d << "; p(t=2.16, df=4)=" << p216 << ", p(t=1.23, df=4)=" << p123;
    report(5, "statistics oracle", ok, d.str());
}

// --- criterion 6: determinism ----------------------------------------------

void criterion_6() {
    fs::path prep = fresh_dir("sf_acc_det_prep");
    bool ok = run_cli("prepare --synthetic --days 150 --weekly-amp 10 --seed 6 --out " +
                      prep.string()) == 0;
    const fs::path m1 = fs::temp_directory_path() / "sf_acc_det1.tlsb";
    const fs::path m2 = fs::temp_directory_path() / "sf_acc_det2.tlsb";
    const std::string flags = " --hidden 16 --epochs 3 --batch 16 --seed 17 --out ";
    ok &= run_cli("train --prepared " + prep.string() + flags + m1.string()) == 0;
    ok &= run_cli("train --prepared " + prep.string() + flags + m2.string()) == 0;
    const bool models_identical = ok && slurp(m1) == slurp(m2);

    // two sweep runs must agree on every accuracy column
    sf::PreparedData data = sf::read_prepared(prep);
    sf::SweepOptions opts;
    opts.variants = {16};
    opts.repetitions = 2;
    sf::TrainConfig tc;
    tc.epochs = 3;
    tc.batch_size = 16;
    sf::ModelConfig base;
    sf::SweepReport a = sf::run_sweep(data, base, tc, opts, fresh_dir("sf_acc_det_sw1"));
    sf::SweepReport b = sf::run_sweep(data, base, tc, opts, fresh_dir("sf_acc_det_sw2"));
    bool sweeps_identical = a.rows.size() == b.rows.size();
    for (std::size_t i = 0; sweeps_identical && i < a.rows.size(); ++i)
        sweeps_identical = a.rows[i].mape_per_rep == b.rows[i].mape_per_rep &&
                           a.rows[i].rmse_per_rep == b.rows[i].rmse_per_rep;

    std::ostringstream d;
    d << "repeated training byte-identical: " << (models_identical ? "yes" : "NO")
      << "; repeated sweep accuracy columns identical: " << (sweeps_identical ? "yes" : "NO");
    report(6, "determinism", models_identical && sweeps_identical, d.str());
}

// --- criterion 7: persistence fidelity -------------------------------------

void criterion_7() {
    sf::ModelConfig cfg;
    cfg.hidden_units = 32;
    sf::ModelWeights w = sf::init_weights(cfg, 21);
    sf::Scaler s;
    s.fitted = true;
    for (std::size_t c = 0; c < sf::Scaler::kChannels; ++c) {
        s.min[c] = 0;
        s.max[c] = 1;
    }
    const fs::path p = fs::temp_directory_path() / "sf_acc_persist.tlsb";
    sf::save_model(p.string(), cfg, w, s, {});
    sf::LoadedModel m = sf::load_model(p.string());
    const sf::ModelWeights q = sf::quantize_to_f32(w); // in-memory 32-bit reference

    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::size_t mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        sf::Matrix window(cfg.seq_len, cfg.input_dim);
        for (double& v : window.storage()) v = u(rng);
        if (sf::forward(m.config, m.weights, window) != sf::forward(cfg, q, window)) ++mismatches;
    }
    std::ostringstream d;
    d << "save->load->predict vs in-memory 32-bit predict: " << (1000 - mismatches)
      << "/1000 windows bit-exact";
    report(7, "persistence fidelity", mismatches == 0, d.str());
}

// --- criterion 8: latency methodology --------------------------------------

void criterion_8() {
    // models of every size predicting the same window on this idle host
    sf::Matrix window(30, 7, 0.5);
    sf::Scaler s;
    s.fitted = true;
    for (std::size_t c = 0; c < sf::Scaler::kChannels; ++c) {
        s.min[c] = 0;
        s.max[c] = 1;
    }
    double median16 = 0, median128 = 0;
    std::ostringstream d;
    d << "median latency ms:";
    for (std::size_t h : {16u, 32u, 48u, 64u, 128u}) {
        sf::ModelConfig cfg;
        cfg.hidden_units = h;
        const fs::path p =
            fs::temp_directory_path() / ("sf_acc_lat_h" + std::to_string(h) + ".tlsb");
        sf::save_model(p.string(), cfg, sf::init_weights(cfg, 3), s, {});
        sf::LatencyStats st = sf::measure_latency(p.string(), window, 20, 500);
        d << " h" << h << "=" << st.median_ms;
        if (h == 16) median16 = st.median_ms;
        if (h == 128) median128 = st.median_ms;
    }
    const bool ok = median16 <= median128 * 1.05;
    d << (ok ? "; h=16 within 1.05x of h=128" : "; overhead does NOT dominate");
    d << " (absolute published latency/memory figures are out of scope)";
    report(8, "latency methodology", ok, d.str());
}

// --- criterion 9: leakage audit ---------------------------------------------

void criterion_9() {
    sf::SyntheticSpec spec;
    spec.n_days = 400;
    spec.weekly_amplitude = 10;
    spec.yearly_amplitude = 20;
    spec.trend_per_day = 0.1;
    spec.noise_std = 3.0;
    spec.seed = 31;
    const std::vector<sf::SalesRecord> raw = sf::generate_synthetic(spec);
    auto windows = sf::build_windows(raw);
    sf::SplitPlan split = sf::temporal_split(windows.size(), 0.8);

    // 100 random training windows recomputed from history truncated at the
    // target date must match the stored features bit-exactly
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<std::size_t> pick(split.train.begin, split.train.end - 1);
    bool features_exact = true;
    for (int trial = 0; trial < 100; ++trial) {
        const sf::FeatureWindow& w = windows[pick(rng)];
        const std::int64_t offset = w.target_date.serial() - raw.front().date.serial();
        std::vector<sf::SalesRecord> truncated(raw.begin(), raw.begin() + offset + 1);
        auto rebuilt = sf::build_windows(truncated);
        const sf::FeatureWindow& r = rebuilt.back();
        features_exact &= r.target_date == w.target_date && r.inputs == w.inputs &&
                          r.target == w.target;
    }

    // scaler parameters must not depend on test-period data
    std::vector<sf::FeatureWindow> train_raw(windows.begin() + split.train.begin,
                                             windows.begin() + split.train.end);
    const sf::Scaler before = sf::fit_scaler(train_raw);
    std::vector<sf::SalesRecord> perturbed = raw;
    const std::int64_t test_start_day = windows[split.test.begin].target_date.serial();
    for (auto& rec : perturbed)
        if (rec.date.serial() >= test_start_day) rec.sales = rec.sales * 10 + 1234;
    auto perturbed_windows = sf::build_windows(perturbed);
    std::vector<sf::FeatureWindow> perturbed_train(perturbed_windows.begin() + split.train.begin,
                                                   perturbed_windows.begin() + split.train.end);
    const sf::Scaler after = sf::fit_scaler(perturbed_train);
    bool scaler_unchanged = true;
    for (std::size_t c = 0; c < sf::Scaler::kChannels; ++c)
        scaler_unchanged &= before.min[c] == after.min[c] && before.max[c] == after.max[c];

    std::ostringstream d;
    d << "100/100 truncated-history feature recomputations "
      << (features_exact ? "bit-exact" : "MISMATCHED") << "; scaler "
      << (scaler_unchanged ? "unchanged" : "CHANGED") << " after test-period perturbation";
    report(9, "leakage audit", features_exact && scaler_unchanged, d.str());
}

} // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    if (g_failures) {
        std::printf("ACCEPTANCE: %d criterion(s) FAILED\n", g_failures);
        return 1;
    }
    std::printf("ACCEPTANCE: all 9 criteria passed\n");
    return 0;
}

#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "salesforecast/nn.hpp"

using namespace salesforecast;

namespace {

ModelConfig small_config(std::size_t hidden = 4, std::size_t seq = 5) {
    ModelConfig cfg;
    cfg.hidden_units = hidden;
    cfg.seq_len = seq;
    cfg.dropout_rate = 0.0;
    return cfg;
}

// Independent scalar-loop oracle for one LSTM step, written without the
// Matrix helpers.
struct OracleStep {
    std::vector<double> h, c, f, i, g, o;
};

OracleStep oracle_step(const LstmCellWeights& w, const std::vector<double>& x,
                       const std::vector<double>& h_prev, const std::vector<double>& c_prev) {
    const std::size_t hid = h_prev.size();
    std::vector<double> concat = h_prev;
    concat.insert(concat.end(), x.begin(), x.end());
    auto gate = [&](const GateWeights& gw, bool tanh_act) {
        std::vector<double> out(hid);
        for (std::size_t j = 0; j < hid; ++j) {
            double z = gw.b[j];
            for (std::size_t k = 0; k < concat.size(); ++k) z += gw.w(j, k) * concat[k];
            out[j] = tanh_act ? std::tanh(z) : 1.0 / (1.0 + std::exp(-z));
        }
        return out;
    };
    OracleStep r;
    r.f = gate(w.forget, false);
    r.i = gate(w.input, false);
    r.g = gate(w.candidate, true);
    r.o = gate(w.output, false);
    r.c.resize(hid);
    r.h.resize(hid);
    for (std::size_t j = 0; j < hid; ++j) {
        r.c[j] = r.f[j] * c_prev[j] + r.i[j] * r.g[j];
        r.h[j] = r.o[j] * std::tanh(r.c[j]);
    }
    return r;
}

} // namespace

TEST_CASE("lstm cell with all-zero weights") {
    ModelConfig cfg = small_config(3, 5);
    ModelWeights w = ModelWeights::zeros(cfg);
    std::vector<double> x(cfg.input_dim, 0.7), h0(3, 0.0), c0 = {0.2, -0.4, 1.0};
    auto r = lstm_cell_forward(w.lstm, x, h0, c0);
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(r.f[j] == 0.5);
        CHECK(r.i[j] == 0.5);
        CHECK(r.o[j] == 0.5);
        CHECK(r.g[j] == 0.0);
        CHECK(r.c[j] == Catch::Approx(0.5 * c0[j]));
        CHECK(r.h[j] == Catch::Approx(0.5 * std::tanh(0.5 * c0[j])));
    }
}

TEST_CASE("scalar cell: large forget bias remembers the cell state") {
    ModelConfig cfg;
    cfg.hidden_units = 1;
    cfg.input_dim = 1;
    cfg.seq_len = 1;
    ModelWeights w = ModelWeights::zeros(cfg);
    w.lstm.forget.b[0] = 10.0;
    auto r = lstm_cell_forward(w.lstm, {0.0}, {0.0}, {1.0});
    const double c_expect = sigmoid(10.0); // ~0.99995, plus i*g = 0
    CHECK(r.c[0] == Catch::Approx(c_expect).epsilon(1e-12));
    CHECK(r.h[0] == Catch::Approx(0.5 * std::tanh(c_expect)).epsilon(1e-12));
}

TEST_CASE("cell forward matches the scalar-loop oracle to 1e-12") {
    ModelConfig cfg = small_config(4, 5);
    ModelWeights w = init_weights(cfg, 11);
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> x(cfg.input_dim), h(4), c(4);
    for (auto* v : {&x, &h, &c})
        for (double& e : *v) e = dist(rng);
    auto got = lstm_cell_forward(w.lstm, x, h, c);
    auto expect = oracle_step(w.lstm, x, h, c);
    for (std::size_t j = 0; j < 4; ++j) {
        CHECK(got.h[j] == Catch::Approx(expect.h[j]).margin(1e-12));
        CHECK(got.c[j] == Catch::Approx(expect.c[j]).margin(1e-12));
    }
}

TEST_CASE("gate ranges hold for random finite inputs") {
    ModelConfig cfg = small_config(6, 3);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> dist(-3.0, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        ModelWeights w = init_weights(cfg, rng());
        std::vector<double> x(cfg.input_dim), h(6), c(6);
        for (auto* v : {&x, &h, &c})
            for (double& e : *v) e = dist(rng);
        auto r = lstm_cell_forward(w.lstm, x, h, c);
        for (std::size_t j = 0; j < 6; ++j) {
            CHECK(r.f[j] > 0.0);
            CHECK(r.f[j] < 1.0);
            CHECK(r.i[j] > 0.0);
            CHECK(r.i[j] < 1.0);
            CHECK(r.o[j] > 0.0);
            CHECK(r.o[j] < 1.0);
            CHECK(r.g[j] > -1.0);
            CHECK(r.g[j] < 1.0);
            CHECK(std::abs(r.h[j]) < 1.0);
        }
    }
}

TEST_CASE("cell rejects shape mismatches") {
    ModelConfig cfg = small_config(4, 5);
    ModelWeights w = ModelWeights::zeros(cfg);
    CHECK_THROWS_AS(lstm_cell_forward(w.lstm, {0.1}, std::vector<double>(4, 0.0),
                                      std::vector<double>(4, 0.0)),
                    std::invalid_argument);
}

TEST_CASE("full forward") {
    ModelConfig cfg = small_config(4, 5);
    Matrix window(cfg.seq_len, cfg.input_dim, 0.3);

    SECTION("all-zero weights predict the (zero) output bias") {
        ModelWeights w = ModelWeights::zeros(cfg);
        CHECK(forward(cfg, w, window) == 0.0);
        w.out_b[0] = 1.25;
        CHECK(forward(cfg, w, window) == 1.25);
    }
    SECTION("inference is bitwise deterministic") {
        ModelWeights w = init_weights(cfg, 3);
        CHECK(forward(cfg, w, window) == forward(cfg, w, window));
    }
    SECTION("train mode with p=0 and full-keep mask equals inference exactly") {
        ModelWeights w = init_weights(cfg, 3);
        std::vector<double> mask(cfg.hidden_units, 1.0);
        CHECK(forward(cfg, w, window, &mask) == forward(cfg, w, window));
    }
    SECTION("window shape mismatch is rejected") {
        ModelWeights w = ModelWeights::zeros(cfg);
        Matrix bad(3, cfg.input_dim, 0.0);
        CHECK_THROWS_AS(forward(cfg, w, bad), std::invalid_argument);
    }
}

TEST_CASE("inverted dropout preserves the expected activation within 1%") {
    const std::size_t h = 8;
    const double p = 0.2;
    std::vector<double> act(h);
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> dist(0.5, 1.5);
    for (double& v : act) v = dist(rng);

    std::vector<double> mean(h, 0.0);
    std::bernoulli_distribution keep(1.0 - p);
    const int n_masks = 100000;
    for (int m = 0; m < n_masks; ++m)
        for (std::size_t j = 0; j < h; ++j)
            if (keep(rng)) mean[j] += act[j] / (1.0 - p);
    for (std::size_t j = 0; j < h; ++j) {
        mean[j] /= n_masks;
        CHECK(mean[j] == Catch::Approx(act[j]).epsilon(0.01));
    }
}

TEST_CASE("MAE loss") {
    CHECK(loss_mae({1, 2, 3}, {1, 2, 3}) == 0.0);
    CHECK(loss_mae({2, 1}, {1, 3}) == 1.5); // predictions [2,1], targets [1,3]
    CHECK(loss_mae({5}, {2}) == 3.0);
    CHECK_THROWS_AS(loss_mae({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(loss_mae({1}, {1, 2}), std::invalid_argument);
    CHECK(mae_gradient(2.0, 1.0) == 1.0);
    CHECK(mae_gradient(1.0, 2.0) == -1.0);
    CHECK(mae_gradient(1.0, 1.0) == 0.0); // subgradient at zero residual
}

TEST_CASE("backward basics") {
    ModelConfig cfg = small_config(4, 5);
    ModelWeights w = init_weights(cfg, 9);
    Matrix window(cfg.seq_len, cfg.input_dim, 0.4);
    ForwardCache cache;
    const double pred = forward(cfg, w, window, nullptr, &cache);

    SECTION("output bias gradient is the upstream MAE sign") {
        ModelWeights g = ModelWeights::zeros(cfg);
        backward(cfg, w, cache, mae_gradient(pred, pred - 1.0), g);
        CHECK(g.out_b[0] == 1.0);
        ModelWeights g2 = ModelWeights::zeros(cfg);
        backward(cfg, w, cache, mae_gradient(pred, pred + 1.0), g2);
        CHECK(g2.out_b[0] == -1.0);
    }
    SECTION("zero upstream gradient gives all-zero gradients") {
        ModelWeights g = ModelWeights::zeros(cfg);
        backward(cfg, w, cache, 0.0, g);
        for_each_tensor(g, [](const char*, std::vector<double>& t) {
            for (double v : t) CHECK(v == 0.0);
        });
    }
}

TEST_CASE("adam") {
    ModelConfig cfg = small_config(2, 2);
    SECTION("zero gradient leaves weights unchanged") {
        ModelWeights w = init_weights(cfg, 4);
        ModelWeights before = w;
        ModelWeights g = ModelWeights::zeros(cfg);
        AdamState st;
        adam_step(st, w, g);
        adam_step(st, w, g);
        bool equal = true;
        std::vector<std::vector<double>*> wt, bt;
        for_each_tensor(w, [&](const char*, std::vector<double>& t) { wt.push_back(&t); });
        for_each_tensor(before, [&](const char*, std::vector<double>& t) { bt.push_back(&t); });
        for (std::size_t k = 0; k < wt.size(); ++k) equal = equal && (*wt[k] == *bt[k]);
        CHECK(equal);
        CHECK(st.step == 2);
    }
    SECTION("first step magnitude with bias correction") {
        // scalar weight, g = 4: m_hat = 4, v_hat = 16, update = lr*4/(4+eps)
        ModelWeights w = ModelWeights::zeros(cfg);
        ModelWeights g = ModelWeights::zeros(cfg);
        w.out_b[0] = 1.0;
        g.out_b[0] = 4.0;
        AdamState st;
        adam_step(st, w, g);
        const double expected = 0.001 * 4.0 / (4.0 + 1e-8);
        CHECK(1.0 - w.out_b[0] == Catch::Approx(expected).epsilon(1e-9));
    }
    SECTION("identical gradients give identical trajectories") {
        ModelWeights w1 = init_weights(cfg, 8), w2 = init_weights(cfg, 8);
        AdamState s1, s2;
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> dist(-1, 1);
        for (int step = 0; step < 20; ++step) {
            ModelWeights g = ModelWeights::zeros(cfg);
            for_each_tensor(g, [&](const char*, std::vector<double>& t) {
                for (double& v : t) v = dist(rng);
            });
            adam_step(s1, w1, g);
            adam_step(s2, w2, g);
        }
        std::vector<std::vector<double>*> t1, t2;
        for_each_tensor(w1, [&](const char*, std::vector<double>& t) { t1.push_back(&t); });
        for_each_tensor(w2, [&](const char*, std::vector<double>& t) { t2.push_back(&t); });
        for (std::size_t k = 0; k < t1.size(); ++k) CHECK(*t1[k] == *t2[k]);
    }
}

TEST_CASE("init_weights") {
    ModelConfig cfg;
    cfg.hidden_units = 32;
    SECTION("deterministic per seed") {
        ModelWeights a = init_weights(cfg, 123), b = init_weights(cfg, 123);
        CHECK(a.lstm.forget.w == b.lstm.forget.w);
        CHECK(a.out_w == b.out_w);
        ModelWeights c = init_weights(cfg, 124);
        CHECK_FALSE(a.lstm.forget.w == c.lstm.forget.w);
    }
    SECTION("forget-gate bias starts at 1.0, everything else at 0") {
        ModelWeights w = init_weights(cfg, 1);
        for (double v : w.lstm.forget.b) CHECK(v == 1.0);
        for (double v : w.lstm.input.b) CHECK(v == 0.0);
        for (double v : w.dense_b) CHECK(v == 0.0);
    }
    SECTION("by-construction parameter count matches the closed form") {
        for (std::size_t h : {16u, 32u, 48u, 64u, 128u}) {
            ModelConfig c;
            c.hidden_units = h;
            CHECK(tensor_element_count(init_weights(c, 7)) == param_count(c));
        }
        CHECK(param_count(cfg) == 5665); // h = 32
    }
}

TEST_CASE("gradient check vs central finite differences") {
    SECTION("small model passes at 1e-4 across seeds") {
        for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
            auto report = grad_check(small_config(4, 5), seed, 1e-4);
            INFO("seed " << seed << " worst block " << report.worst_block << " err "
                         << report.max_rel_error);
            CHECK(report.passed);
        }
    }
    SECTION("corrupted W_f gradient fails with W_f named") {
        auto report = grad_check(small_config(4, 5), 1, 1e-4, 1e-5, [](ModelWeights& g) {
            for (double& v : g.lstm.forget.w.storage()) v *= 2.0;
        });
        CHECK_FALSE(report.passed);
        CHECK(report.worst_block == "W_f");
    }
    SECTION("infinite tolerance always passes") {
        auto report = grad_check(small_config(2, 2), 5,
                                 std::numeric_limits<double>::infinity());
        CHECK(report.passed);
    }
}

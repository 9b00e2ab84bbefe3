#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "fraug/error.hpp"
#include "fraug/forecaster.hpp"
#include "fraug/kernels.hpp"
#include "oracles.hpp"

using namespace fraug;

namespace {

DLinearModel random_model(std::size_t b, std::size_t h, std::size_t kernel, std::uint64_t seed) {
    Rng rng(seed);
    auto m = DLinearModel::initialized(b, h, kernel, rng);
    std::normal_distribution<double> g(0.0, 0.1);
    for (auto p : m.parameters())
        for (double& v : p) v += g(rng);
    return m;
}

std::vector<WindowSample> random_samples(std::size_t n, std::size_t c, std::size_t b, std::size_t h, std::uint64_t seed) {
    std::mt19937_64 r(seed);
    std::vector<WindowSample> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(oracle::random_sample(r, c, b, h));
    return out;
}

// Every horizon step is twice the matching look-back value.
std::vector<WindowSample> doubling_samples(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 r(seed);
    std::normal_distribution<double> g;
    std::vector<WindowSample> out;
    for (std::size_t i = 0; i < n; ++i) {
        WindowSample s{Matrix(1, 4), Matrix(1, 2), i};
        for (double& v : s.lookback.values()) v = g(r);
        s.horizon(0, 0) = 2.0 * s.lookback(0, 2);
        s.horizon(0, 1) = 2.0 * s.lookback(0, 3);
        out.push_back(std::move(s));
    }
    return out;
}

double batch_loss(const DLinearModel& m, std::span<const WindowSample> batch) {
    return kernels::serial::evaluate(m, batch).mse;
}

}  // namespace

TEST_CASE("zero model predicts zero") {
    const auto m = DLinearModel::zeros(12, 5);
    std::mt19937_64 r(1);
    const auto s = oracle::random_sample(r, 3, 12, 5);
    CHECK(forward(m, s.lookback) == Matrix(3, 5));
    CHECK(m.parameter_count() == 2 * 12 * 5 + 2 * 5);
}

TEST_CASE("moving average") {
    const std::vector<double> x{1, 2, 3, 4, 10};
    CHECK(moving_average(x, 1) == x);
    const auto ma = moving_average(x, 3);
    CHECK(ma[0] == doctest::Approx((1 + 1 + 2) / 3.0));
    CHECK(ma[2] == doctest::Approx(3.0));
    CHECK(ma[4] == doctest::Approx((4 + 10 + 10) / 3.0));
    std::mt19937_64 r(2);
    const auto y = oracle::random_vector(r, 96);
    CHECK(oracle::max_abs_diff(moving_average(y, 25), oracle::moving_average(y, 25)) < 1e-12);
    CHECK_THROWS_AS(moving_average(y, 4), Error);
}

TEST_CASE("trend operator reproduces the moving average") {
    std::mt19937_64 r(3);
    for (std::size_t k : {1u, 3u, 25u}) {
        const auto a = trend_operator(30, k);
        const auto x = oracle::random_vector(r, 30);
        std::vector<double> ax(30, 0.0);
        for (std::size_t i = 0; i < 30; ++i)
            for (std::size_t j = 0; j < 30; ++j) ax[i] += a(i, j) * x[j];
        CHECK(oracle::max_abs_diff(ax, moving_average(x, k)) < 1e-12);
    }
}

TEST_CASE("kernel 1 leaves only the trend path") {
    auto m = random_model(10, 4, 1, 4);
    std::mt19937_64 r(5);
    const auto s = oracle::random_sample(r, 2, 10, 4);
    const auto y = forward(m, s.lookback);
    for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t t = 0; t < 4; ++t) {
            double v = m.b_trend[t] + m.b_seasonal[t];
            for (std::size_t j = 0; j < 10; ++j) v += m.w_trend(t, j) * s.lookback(c, j);
            CHECK(std::abs(y(c, t) - v) < 1e-12);
        }
}

TEST_CASE("forward matches the dense oracle") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto m = random_model(96, 24, 25, seed);
        std::mt19937_64 r(seed + 100);
        const auto s = oracle::random_sample(r, 7, 96, 24);
        const auto y = forward(m, s.lookback);
        const auto ref = oracle::dlinear_forward(m.w_trend, m.w_seasonal, m.b_trend, m.b_seasonal, 25, s.lookback);
        CHECK(oracle::max_abs_diff(y.values(), ref.values()) < 1e-12);

        // the collapsed affine map agrees too
        const auto e = effective(m);
        for (std::size_t c = 0; c < 7; ++c)
            for (std::size_t t = 0; t < 24; ++t) {
                double v = e.bias[t];
                for (std::size_t j = 0; j < 96; ++j) v += e.weights(t, j) * s.lookback(c, j);
                CHECK(std::abs(v - ref(c, t)) < 1e-12);
            }
    }
    const auto m = random_model(8, 4, 3, 1);
    CHECK_THROWS_AS(forward(m, Matrix(1, 9)), Error);
}

TEST_CASE("evaluate") {
    const auto m = random_model(6, 3, 3, 7);
    std::mt19937_64 r(8);
    std::vector<WindowSample> perfect;
    for (int i = 0; i < 5; ++i) {
        auto s = oracle::random_sample(r, 2, 6, 3);
        s.horizon = forward(m, s.lookback);
        perfect.push_back(s);
    }
    auto met = evaluate(m, perfect);
    CHECK(met.mse < 1e-24);
    CHECK(met.mae < 1e-12);
    CHECK(met.n_samples == 5);

    auto shifted = perfect;
    for (auto& s : shifted)
        for (double& v : s.horizon.values()) v -= 0.25;
    met = evaluate(m, shifted);
    CHECK(met.mse == doctest::Approx(0.0625).epsilon(1e-12));
    CHECK(met.mae == doctest::Approx(0.25).epsilon(1e-12));

    const auto random = random_samples(9, 3, 6, 3, 9);
    double sq = 0.0, ab = 0.0;
    for (const auto& s : random) {
        const auto p = oracle::dlinear_forward(m.w_trend, m.w_seasonal, m.b_trend, m.b_seasonal, 3, s.lookback);
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double d = p.values()[i] - s.horizon.values()[i];
            sq += d * d;
            ab += std::abs(d);
        }
    }
    met = evaluate(m, random);
    CHECK(std::abs(met.mse - sq / (9 * 3 * 3)) < 1e-12);
    CHECK(std::abs(met.mae - ab / (9 * 3 * 3)) < 1e-12);
    CHECK_THROWS_AS(evaluate(m, std::vector<WindowSample>{}), Error);
}

TEST_CASE("analytic gradients match central differences") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto m = random_model(8, 4, 3, seed);
        const auto batch = random_samples(5, 2, 8, 4, seed + 50);
        Gradients g = Gradients::zeros_like(m);
        Gradients gs = Gradients::zeros_like(m);
        kernels::loss_and_gradients(m, batch, g);
        kernels::serial::loss_and_gradients(m, batch, gs);
        const double step = 1e-5;
        auto params = m.parameters();
        const auto ga = g.parameters();
        const auto gsa = gs.parameters();
        for (std::size_t p = 0; p < 4; ++p)
            for (std::size_t i = 0; i < params[p].size(); ++i) {
                const double keep = params[p][i];
                params[p][i] = keep + step;
                const double up = batch_loss(m, batch);
                params[p][i] = keep - step;
                const double down = batch_loss(m, batch);
                params[p][i] = keep;
                const double numeric = (up - down) / (2.0 * step);
                const double scale = std::max({std::abs(numeric), std::abs(ga[p][i]), 1e-12});
                CHECK(std::abs(ga[p][i] - numeric) / scale < 1e-5);
                CHECK(std::abs(gsa[p][i] - numeric) / scale < 1e-5);
            }
    }
}

TEST_CASE("early stopper") {
    EarlyStopper s(3);
    const double seq[] = {1.0, 0.9, 0.95, 0.96, 0.97};
    std::vector<bool> stops;
    for (double v : seq) stops.push_back(s.observe(v));
    CHECK(stops == std::vector<bool>{false, false, false, false, true});
    CHECK(s.best_epoch() == 2);
    CHECK(s.best_loss() == 0.9);

    EarlyStopper equal(2);
    CHECK_FALSE(equal.observe(1.0));
    CHECK_FALSE(equal.observe(1.0));  // not strictly lower
    CHECK(equal.observe(1.0));
    CHECK(equal.best_epoch() == 1);
}

TEST_CASE("zero epochs returns the initial model") {
    const auto init = random_model(4, 2, 3, 11);
    const auto data = doubling_samples(20, 12);
    TrainConfig cfg;
    cfg.max_epochs = 0;
    cfg.kernel = 3;
    const auto res = train(init, data, data, cfg, AugmentSpec{});
    CHECK(res.model == init);
    CHECK(res.trace.epochs.empty());
    CHECK(res.trace.best_epoch == 0);
}

TEST_CASE("fits a noiseless linear map") {
    const auto train_set = doubling_samples(256, 13);
    const auto val_set = doubling_samples(64, 14);
    TrainConfig cfg;
    cfg.max_epochs = 200;
    cfg.patience = 200;
    cfg.kernel = 3;
    cfg.seed = 1;
    const auto res = train(train_set, val_set, cfg, AugmentSpec{});
    CHECK(evaluate(res.model, train_set).mse < 1e-6);
    CHECK(res.trace.epochs.size() <= 200);
}

TEST_CASE("training restores the best validation epoch and is reproducible") {
    const auto train_set = random_samples(96, 2, 16, 8, 15);
    const auto val_set = random_samples(32, 2, 16, 8, 16);
    TrainConfig cfg;
    cfg.max_epochs = 15;
    cfg.patience = 2;
    cfg.kernel = 5;
    cfg.seed = 3;
    AugmentSpec aug;
    aug.kind = AugmentKind::FreqMask;
    aug.rate = 0.2;
    aug.seed = 4;
    const auto a = train(train_set, val_set, cfg, aug);
    const auto b = train(train_set, val_set, cfg, aug);
    CHECK(a.model == b.model);
    REQUIRE(a.trace.epochs.size() == b.trace.epochs.size());
    for (std::size_t i = 0; i < a.trace.epochs.size(); ++i) {
        CHECK(a.trace.epochs[i].train_loss == b.trace.epochs[i].train_loss);
        CHECK(a.trace.epochs[i].val_loss == b.trace.epochs[i].val_loss);
    }
    CHECK(evaluate(a.model, val_set).mse == a.trace.best_val_loss());
    CHECK(a.trace.epochs[a.trace.best_epoch - 1].val_loss == a.trace.best_val_loss());
    CHECK(a.trace.samples_per_step == cfg.batch_size);

    cfg.seed = 4;
    const auto c = train(train_set, val_set, cfg, aug);
    CHECK_FALSE(c.model == a.model);

    const auto plain = train(train_set, val_set, cfg, AugmentSpec{});
    CHECK(plain.trace.samples_per_step == cfg.batch_size);
}

TEST_CASE("divergence names the epoch") {
    auto data = doubling_samples(8, 17);
    for (auto& s : data) {
        for (double& v : s.lookback.values()) v *= 1e170;
        for (double& v : s.horizon.values()) v *= 1e170;
    }
    TrainConfig cfg;
    cfg.kernel = 3;
    CHECK_THROWS_WITH_AS(train(data, data, cfg, AugmentSpec{}), doctest::Contains("divergence"), Error);
    CHECK_THROWS_WITH_AS(train(data, data, cfg, AugmentSpec{}), doctest::Contains("epoch 1"), Error);
}

TEST_CASE("config validation") {
    TrainConfig cfg;
    cfg.batch_size = 0;
    CHECK_THROWS_AS(validate(cfg), Error);
    cfg = {};
    cfg.patience = 0;
    CHECK_THROWS_AS(validate(cfg), Error);
    cfg = {};
    cfg.kernel = 24;
    CHECK_THROWS_AS(validate(cfg), Error);
    const auto data = doubling_samples(4, 1);
    CHECK_THROWS_AS(train(std::vector<WindowSample>{}, data, TrainConfig{}, AugmentSpec{}), Error);
    CHECK_THROWS_AS(train(data, std::vector<WindowSample>{}, TrainConfig{}, AugmentSpec{}), Error);
}

TEST_CASE("checkpoint round trip") {
    const auto m = random_model(24, 12, 25, 18);
    const auto dir = std::filesystem::temp_directory_path() / "fraug_test_forecaster";
    std::filesystem::create_directories(dir);
    const auto path = dir / "model.json";
    save_checkpoint(m, TrainConfig{}, path);
    CHECK(load_checkpoint(path) == m);
    {
        std::ifstream in(path);
        const std::string text((std::istreambuf_iterator<char>(in)), {});
        CHECK(text.find(kCheckpointMagic) != std::string::npos);
    }
    const auto bad = dir / "bad.json";
    std::ofstream(bad) << R"({"format": "something-else", "lookback": 1})";
    CHECK_THROWS_WITH_AS(load_checkpoint(bad), doctest::Contains("FRAUG-DLINEAR-v1"), Error);
    CHECK_THROWS_AS(load_checkpoint(dir / "missing.json"), Error);
}

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "doctest.h"
#include "fraug/error.hpp"
#include "fraug/experiments.hpp"
#include "json.hpp"
#include "oracles.hpp"

using namespace fraug;

namespace {

TimeSeriesDataset seasonal_series(std::size_t length, std::uint64_t seed, double shift_at = -1.0, double shift = 0.0) {
    TimeSeriesDataset ds;
    ds.names = {"a", "OT"};
    ds.values = Matrix(2, length);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 0.3);
    for (std::size_t t = 0; t < length; ++t) {
        const double x = static_cast<double>(t);
        const double level = (shift_at >= 0.0 && x >= shift_at) ? shift : 0.0;
        ds.values(0, t) = std::sin(2.0 * std::numbers::pi * x / 12.0) + g(rng) + level;
        ds.values(1, t) = 0.5 * std::cos(2.0 * std::numbers::pi * x / 12.0) + g(rng) + level;
        ds.timestamps.push_back(std::to_string(t));
    }
    return ds;
}

ExperimentOptions small_options() {
    ExperimentOptions o;
    o.dataset_id = "synthetic";
    o.lookback = 24;
    o.horizons = {12};
    o.kinds = {AugmentKind::FreqMask};
    o.rate_grid = {0.1, 0.3};
    o.seeds = {1, 2};
    o.train.max_epochs = 3;
    o.train.patience = 2;
    o.train.kernel = 5;
    o.augment.period = 12;
    return o;
}

}  // namespace

TEST_CASE("protocol names") {
    for (auto p : {Protocol::LongTerm, Protocol::ColdStart, Protocol::Ttt}) CHECK(parse_protocol(to_string(p)) == p);
    CHECK_THROWS_AS(parse_protocol("shortterm"), Error);
}

TEST_CASE("median") {
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0}) == 2.5);
    CHECK_THROWS_AS(median({}), Error);
}

TEST_CASE("copy schedule is the rounded linear ramp") {
    CHECK(ttt_copy_schedule(8) == std::vector<std::size_t>{1, 2, 2, 3, 3, 4, 4, 5});
    CHECK(ttt_copy_schedule(1) == std::vector<std::size_t>{5});
    CHECK(ttt_copy_schedule(2) == std::vector<std::size_t>{1, 5});
    CHECK(ttt_copy_schedule(5) == std::vector<std::size_t>{1, 2, 3, 4, 5});
    // round half up: 1 + 4 * 1/8 = 1.5 -> 2
    CHECK(ttt_copy_schedule(9)[1] == 2);
    for (std::size_t n = 2; n <= 19; ++n) {
        const auto s = ttt_copy_schedule(n);
        CHECK(s.front() == 1);
        CHECK(s.back() == 5);
        CHECK(std::is_sorted(s.begin(), s.end()));
        for (std::size_t r = 0; r < n; ++r)
            CHECK(s[r] == static_cast<std::size_t>(std::floor(1.0 + 4.0 * static_cast<double>(r) / static_cast<double>(n - 1) + 0.5)));
    }
}

TEST_CASE("series partition") {
    const auto p = partition_series(103, 20);
    REQUIRE(p.size() == 20);
    CHECK(p.front() == std::pair<std::size_t, std::size_t>{0, 5});
    CHECK(p[19] == std::pair<std::size_t, std::size_t>{95, 103});
    for (std::size_t i = 1; i < 20; ++i) CHECK(p[i].first == p[i - 1].second);
    CHECK_THROWS_AS(partition_series(10, 20), Error);
}

TEST_CASE("rate selection") {
    const auto ds = split_and_normalize(seasonal_series(600, 1), SplitScheme::Ratio);
    TrainConfig cfg;
    cfg.max_epochs = 3;
    cfg.kernel = 5;
    cfg.seed = 7;
    AugmentSpec tmpl;
    tmpl.seed = 7;

    const auto single = cross_validate_rate(ds, 24, 12, AugmentKind::FreqMask, {0.2}, cfg, tmpl);
    CHECK(single.best_rate == 0.2);
    CHECK(single.scores.size() == 1);

    const auto sel = cross_validate_rate(ds, 24, 12, AugmentKind::FreqMask, {0.5, 0.1, 0.3}, cfg, tmpl);
    REQUIRE(sel.scores.size() == 3);
    std::size_t arg = 0;
    for (std::size_t i = 1; i < 3; ++i)
        if (sel.scores[i].val.mse < sel.scores[arg].val.mse) arg = i;
    CHECK(sel.best_rate == sel.scores[arg].rate);
    CHECK(std::set<double>{0.1, 0.3, 0.5}.count(sel.best_rate) == 1);

    // a rate that masks nothing in practice reproduces rate 0 exactly: ties go to the smaller rate
    const auto tie = cross_validate_rate(ds, 24, 12, AugmentKind::FreqMask, {1e-300, 0.0}, cfg, tmpl);
    REQUIRE(tie.scores.size() == 2);
    CHECK(tie.scores[0].val.mse == tie.scores[1].val.mse);
    CHECK(tie.best_rate == 0.0);

    // mix rates above one half are skipped
    const auto mix = cross_validate_rate(ds, 24, 12, AugmentKind::FreqMix, {0.3, 0.6}, cfg, tmpl);
    CHECK(mix.scores.size() == 1);
    CHECK_THROWS_AS(cross_validate_rate(ds, 24, 12, AugmentKind::FreqMask, {}, cfg, tmpl), Error);
}

TEST_CASE("long-term report is complete and includes the control") {
    const auto ds = split_and_normalize(seasonal_series(800, 2), SplitScheme::Ratio);
    auto opts = small_options();
    opts.horizons = {6, 12};
    opts.kinds = {AugmentKind::FreqMask, AugmentKind::Noise, AugmentKind::FreqMask};
    opts.jobs = 2;
    const auto r = run_longterm(ds, opts);
    CHECK(r.cells.size() == 2 * 3);
    for (auto h : {6u, 12u})
        for (auto k : {AugmentKind::None, AugmentKind::FreqMask, AugmentKind::Noise}) {
            std::size_t count = 0;
            for (const auto& c : r.cells) count += (c.kind == k && c.horizon == h);
            CHECK(count == 1);
            REQUIRE(r.find(k, h));
            CHECK(r.find(k, h)->per_seed.size() == 2);
        }
    const auto* fm = r.find(AugmentKind::FreqMask, 12);
    CHECK((fm->chosen_rate == 0.1 || fm->chosen_rate == 0.3));
    for (const auto& s : fm->per_seed) CHECK(s.candidates.size() == 2);

    // control is the plain training under the same seed
    TrainConfig cfg = opts.train;
    cfg.seed = 1;
    const auto plain = train(make_windows(ds, Split::Train, 24, 12), make_windows(ds, Split::Val, 24, 12), cfg, AugmentSpec{});
    CHECK(r.find(AugmentKind::None, 12)->per_seed[0].test.mse == evaluate(plain.model, make_windows(ds, Split::Test, 24, 12)).mse);

    // jobs do not change results
    opts.jobs = 1;
    const auto serial = run_longterm(ds, opts);
    for (std::size_t i = 0; i < r.cells.size(); ++i)
        for (std::size_t s = 0; s < 2; ++s) CHECK(serial.cells[i].per_seed[s].test.mse == r.cells[i].per_seed[s].test.mse);

    const auto j = nlohmann::json::parse(report_json(r));
    CHECK(j["protocol"] == "longterm");
    CHECK(j["cells"].size() == 6);
    CHECK(report_text(r).find("freq_mask") != std::string::npos);
    const auto csv = trace_csv(r);
    CHECK(csv.rfind("kind,horizon,seed,epoch,train_loss,val_loss\n", 0) == 0);
}

TEST_CASE("cold start") {
    const auto ds = split_and_normalize(seasonal_series(2000, 3), SplitScheme::Ratio);
    auto opts = small_options();
    opts.fraction = 0.05;
    opts.factors = {1, 3};
    opts.seeds = {5};
    const auto r = run_coldstart(ds, opts);
    REQUIRE(r.find(AugmentKind::None, 12));
    const auto* fm = r.find(AugmentKind::FreqMask, 12);
    REQUIRE(fm);
    CHECK(fm->per_seed[0].candidates.size() == 4);  // 2 factors x 2 rates
    CHECK((fm->chosen_factor == 1 || fm->chosen_factor == 3));

    // the control trains on exactly the last fraction of the training windows
    const auto all = make_windows(ds, Split::Train, 24, 12);
    const auto tail = take_last_fraction(all, 0.05);
    CHECK(tail.size() == last_fraction_count(all.size(), 0.05));
    TrainConfig cfg = opts.train;
    cfg.seed = 5;
    const auto plain = train(tail, make_windows(ds, Split::Val, 24, 12), cfg, AugmentSpec{});
    CHECK(r.find(AugmentKind::None, 12)->per_seed[0].test.mse ==
          evaluate(plain.model, make_windows(ds, Split::Test, 24, 12)).mse);

    // factor 1 with no augmentation is the plain 1%-style training
    Rng rng(1);
    CHECK(expand_dataset(tail, AugmentSpec{}, 1, rng) == tail);
}

TEST_CASE("test-time training") {
    const auto raw = seasonal_series(1200, 4, 600.0, 2.0);
    auto opts = small_options();
    opts.parts = 6;
    opts.seeds = {1, 2, 3};
    opts.augment.rate = 0.2;
    const auto r = run_ttt(raw, opts);
    REQUIRE(r.ttt.size() == 2);
    for (const auto& c : r.ttt) {
        CHECK(c.per_seed_losses.size() == 3);
        for (const auto& s : c.per_seed_losses) CHECK(s.size() == opts.parts - 1);
        CHECK(c.median_losses.size() == opts.parts - 1);
        CHECK(c.mean_loss_per_seed.size() == 3);
    }
    const auto* fm = r.find_ttt(AugmentKind::FreqMask, 12);
    REQUIRE(fm);
    CHECK(fm->rate == 0.2);
    REQUIRE(fm->copy_schedules.size() == opts.parts - 1);
    for (std::size_t i = 1; i < opts.parts; ++i) CHECK(fm->copy_schedules[i - 1] == ttt_copy_schedule(i));
    CHECK(r.find_ttt(AugmentKind::None, 12)->copy_schedules.empty());

    const auto csv = ttt_parts_csv(r);
    CHECK(csv.rfind("kind,horizon,seed,part,test_mse\n", 0) == 0);
    CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) == 1 + 2 * 3 * (opts.parts - 1));

    // two parts: one round, trained on the first part and tested on the second
    opts.parts = 2;
    opts.seeds = {1};
    const auto two = run_ttt(raw, opts);
    CHECK(two.find_ttt(AugmentKind::None, 12)->per_seed_losses[0].size() == 1);

    // grid default when the template rate is unset
    opts.augment.rate = 0.0;
    CHECK(run_ttt(raw, opts).find_ttt(AugmentKind::FreqMask, 12)->rate == 0.1);

    opts.parts = 100;
    CHECK_THROWS_WITH_AS(run_ttt(raw, opts), doctest::Contains("part 0"), Error);
    opts.parts = 1;
    CHECK_THROWS_AS(run_ttt(raw, opts), Error);
}

TEST_CASE("warm start continues from the previous round") {
    const auto raw = seasonal_series(600, 5);
    auto opts = small_options();
    opts.parts = 3;
    opts.seeds = {1};
    opts.kinds = {};
    const auto cold = run_ttt(raw, opts);
    opts.warm_start = true;
    const auto warm = run_ttt(raw, opts);
    const auto& c = cold.find_ttt(AugmentKind::None, 12)->per_seed_losses[0];
    const auto& w = warm.find_ttt(AugmentKind::None, 12)->per_seed_losses[0];
    CHECK(c[0] == w[0]);
    CHECK(c[1] != w[1]);
}

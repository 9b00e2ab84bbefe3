#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "doctest.h"
#include "fraug/dataset.hpp"
#include "fraug/error.hpp"
#include "oracles.hpp"

using namespace fraug;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name, const std::string& content) {
    const auto dir = fs::temp_directory_path() / "fraug_test_dataset";
    fs::create_directories(dir);
    const auto p = dir / name;
    std::ofstream(p) << content;
    return p;
}

TimeSeriesDataset synthetic(std::size_t channels, std::size_t length, std::uint64_t seed, double drift = 0.0) {
    TimeSeriesDataset ds;
    ds.values = Matrix(channels, length);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    for (std::size_t c = 0; c < channels; ++c) {
        ds.names.push_back("c" + std::to_string(c));
        for (std::size_t t = 0; t < length; ++t)
            ds.values(c, t) = 3.0 + std::sin(0.26 * static_cast<double>(t) + static_cast<double>(c)) + 0.2 * g(rng) +
                              drift * static_cast<double>(t);
    }
    for (std::size_t t = 0; t < length; ++t) ds.timestamps.push_back(std::to_string(t));
    return ds;
}

}  // namespace

TEST_CASE("load a one-channel csv") {
    const auto p = temp_file("one.csv", "date,OT\n2016-07-01 00:00:00,1.0\n2016-07-01 01:00:00,2.0\n2016-07-01 02:00:00,3.0\n");
    const auto ds = load_csv(p);
    REQUIRE(ds.channels() == 1);
    CHECK(ds.length() == 3);
    CHECK(ds.names == std::vector<std::string>{"OT"});
    CHECK(ds.values.values() == std::vector<double>{1.0, 2.0, 3.0});
    CHECK(ds.timestamps.size() == 3);
    CHECK(ds.timestamps[1] == "2016-07-01 01:00:00");
}

TEST_CASE("channels keep header order and the date column may be anywhere") {
    const auto p = temp_file("order.csv", "HUFL,when,OT\n1,a,10\n2,b,20\n");
    const auto ds = load_csv(p, "when");
    CHECK(ds.names == std::vector<std::string>{"HUFL", "OT"});
    CHECK(ds.values(0, 1) == 2.0);
    CHECK(ds.values(1, 0) == 10.0);
}

TEST_CASE("csv errors carry their location") {
    const auto bad = temp_file("bad.csv", "date,A,B\nx,1,2\ny,3,abc\n");
    try {
        (void)load_csv(bad);
        FAIL("expected an error");
    } catch (const Error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("row 3") != std::string::npos);  // file line, header is row 1
        CHECK(msg.find("'B'") != std::string::npos);
        CHECK(msg.find("abc") != std::string::npos);
    }
    const auto ragged = temp_file("ragged.csv", "date,A,B\nx,1,2\ny,3\n");
    CHECK_THROWS_AS((void)load_csv(ragged), Error);
    CHECK_THROWS_WITH_AS((void)load_csv(temp_file("nodate.csv", "t,A\n1,2\n")),
                         doctest::Contains("date column 'date' not found"), Error);
    CHECK_THROWS_WITH_AS((void)load_csv("/nonexistent/fraug.csv"), doctest::Contains("/nonexistent/fraug.csv"), Error);
}

TEST_CASE("write_csv round-trips exactly") {
    auto ds = synthetic(2, 50, 3);
    const auto p = fs::temp_directory_path() / "fraug_test_dataset" / "rt.csv";
    write_csv(ds, p);
    const auto back = load_csv(p);
    CHECK(back.names == ds.names);
    CHECK(back.values == ds.values);
}

TEST_CASE("split schemes") {
    const auto h = split_bounds(SplitScheme::EttHourly, 17420);
    CHECK(h.train_end == 8640);
    CHECK(h.val_end == 8640 + 2880);
    CHECK(h.test_end == 8640 + 2 * 2880);
    const auto m = split_bounds(SplitScheme::EttMinute, 69680);
    CHECK(m.train_end == 34560);
    CHECK(m.val_end == 34560 + 11520);
    CHECK(m.test_end == 34560 + 2 * 11520);
    const auto r = split_bounds(SplitScheme::Ratio, 1000);
    CHECK(r.train_end == 700);
    CHECK(r.val_end == 800);
    CHECK(r.test_end == 1000);
    CHECK_THROWS_AS(split_bounds(SplitScheme::EttHourly, 10000), Error);
    CHECK(parse_split_scheme("ett-minute") == SplitScheme::EttMinute);
    CHECK_THROWS_AS(parse_split_scheme("monthly"), Error);
}

TEST_CASE("hourly train split yields 8448 windows at b = h = 96") {
    const auto ds = split_and_normalize(synthetic(2, 17420, 1), SplitScheme::EttHourly);
    REQUIRE(ds.bounds);
    CHECK(ds.bounds->train_end == 8640);
    const auto train = make_windows(ds, Split::Train, 96, 96);
    CHECK(train.size() == 8448);
    CHECK(train.front().start_index == 0);
    CHECK(train.back().start_index == 8447);
    // val/test windows: their horizons lie inside the split
    const auto val = make_windows(ds, Split::Val, 96, 96);
    CHECK(val.size() == 2880 - 96);
    CHECK(val.front().start_index + 96 == 8640);
    const auto test = make_windows(ds, Split::Test, 96, 96);
    CHECK(test.front().start_index + 96 == 11520);
    CHECK(test.back().start_index + 96 + 96 < 14400);
}

TEST_CASE("window counts and contiguity") {
    Matrix v(2, 5);
    for (std::size_t t = 0; t < 5; ++t) {
        v(0, t) = static_cast<double>(t);
        v(1, t) = 10.0 * static_cast<double>(t);
    }
    CHECK(make_windows(v, 0, 5, 2, 2).size() == 1);
    CHECK_THROWS_WITH_AS(make_windows(v, 0, 4, 2, 3), "window exceeds split", Error);

    const auto ds = synthetic(3, 300, 9);
    const auto ws = make_windows(ds.values, 10, 290, 24, 12);
    CHECK(ws.size() == 280 - 24 - 12);
    for (const auto& w : ws)
        for (std::size_t c = 0; c < 3; ++c) {
            const auto joined = concatenated(w, c);
            for (std::size_t t = 0; t < joined.size(); ++t) REQUIRE(joined[t] == ds.values(c, w.start_index + t));
        }
    const auto strided = make_windows(ds.values, 0, 300, 24, 12, 5);
    CHECK(strided.size() == (300 - 24 - 12 + 4) / 5);
    CHECK(strided[1].start_index == 5);
}

TEST_CASE("assign_concatenated inverts concatenated") {
    std::mt19937_64 rng(2);
    auto s = oracle::random_sample(rng, 2, 7, 3);
    const auto before = s;
    auto row = concatenated(s, 1);
    assign_concatenated(s, 1, row);
    CHECK(s == before);
}

TEST_CASE("normalization uses training statistics only") {
    const auto raw = synthetic(2, 1000, 4, 0.01);
    const auto ds = split_and_normalize(raw, SplitScheme::Ratio);
    const std::size_t tr = ds.bounds->train_end;
    for (std::size_t c = 0; c < 2; ++c) {
        double mean = 0.0, var = 0.0;
        for (std::size_t t = 0; t < tr; ++t) mean += ds.values(c, t);
        mean /= static_cast<double>(tr);
        for (std::size_t t = 0; t < tr; ++t) var += (ds.values(c, t) - mean) * (ds.values(c, t) - mean);
        CHECK(std::abs(mean) < 1e-6);
        CHECK(std::abs(std::sqrt(var / static_cast<double>(tr)) - 1.0) < 1e-6);

        // the drifting test split has a clearly different mean
        double test_mean = 0.0;
        for (std::size_t t = ds.bounds->val_end; t < ds.length(); ++t) test_mean += ds.values(c, t);
        test_mean /= static_cast<double>(ds.length() - ds.bounds->val_end);
        CHECK(std::abs(test_mean) > 0.5);

        // stats recomputed from the raw training span only
        double raw_mean = 0.0;
        for (std::size_t t = 0; t < tr; ++t) raw_mean += raw.values(c, t);
        CHECK(ds.norm_stats[c].mean == doctest::Approx(raw_mean / static_cast<double>(tr)).epsilon(1e-12));
    }
    // the training split alone determines the result: perturbing the test span leaves it unchanged
    auto altered = raw;
    for (std::size_t t = ds.bounds->val_end; t < raw.length(); ++t) altered.values(0, t) += 100.0;
    const auto ds2 = split_and_normalize(altered, SplitScheme::Ratio);
    CHECK(ds2.norm_stats[0].mean == ds.norm_stats[0].mean);
    CHECK(ds2.norm_stats[0].std == ds.norm_stats[0].std);
}

TEST_CASE("renormalizing normalized data is the identity") {
    const auto once = split_and_normalize(synthetic(3, 500, 5), SplitScheme::Ratio);
    const auto twice = split_and_normalize(once, *once.bounds);
    CHECK(oracle::max_abs_diff(once.values.values(), twice.values.values()) < 1e-9);
}

TEST_CASE("constant channel is degenerate") {
    auto ds = synthetic(2, 200, 6);
    for (double& v : ds.values.row(1)) v = 4.0;
    CHECK_THROWS_WITH_AS(split_and_normalize(ds, SplitScheme::Ratio), doctest::Contains("degenerate channel"), Error);
}

TEST_CASE("last fraction") {
    CHECK(last_fraction_count(8448, 0.01) == 84);
    CHECK(last_fraction_count(100, 0.5) == 50);
    CHECK(last_fraction_count(10, 0.01) == 1);
    CHECK(last_fraction_count(7, 1.0) == 7);
    CHECK_THROWS_AS(last_fraction_count(7, 0.0), Error);
    CHECK_THROWS_AS(last_fraction_count(7, 1.5), Error);

    std::vector<WindowSample> all;
    for (std::size_t i = 0; i < 8448; ++i) all.push_back(WindowSample{Matrix(1, 1), Matrix(1, 1), i});
    const auto tail = take_last_fraction(all, 0.01);
    REQUIRE(tail.size() == 84);
    CHECK(tail.front().start_index == 8364);
    CHECK(tail.back().start_index == 8447);
    CHECK(take_last_fraction(all, 1.0).size() == all.size());
    CHECK_THROWS_AS(take_last_fraction({}, 0.5), Error);
}

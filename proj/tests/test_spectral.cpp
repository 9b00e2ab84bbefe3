#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "doctest.h"
#include "fraug/error.hpp"
#include "fraug/spectral.hpp"
#include "oracles.hpp"

using namespace fraug;

namespace {

double max_bin_diff(const std::vector<Complex>& a, const std::vector<Complex>& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

}  // namespace

TEST_CASE("rfft of a constant signal has only DC") {
    const std::vector<double> x{3.0, 3.0, 3.0, 3.0};
    const auto s = rfft(x);
    REQUIRE(s.bins.size() == 3);
    CHECK(s.origin_len == 4);
    CHECK(std::abs(s.bins[0] - Complex(12.0, 0.0)) < 1e-12);
    CHECK(std::abs(s.bins[1]) < 1e-12);
    CHECK(std::abs(s.bins[2]) < 1e-12);
    CHECK(oracle::max_abs_diff(irfft(s), x) < 1e-12);
}

TEST_CASE("rfft of a quarter-period cosine") {
    const std::vector<double> x{1.0, 0.0, -1.0, 0.0};
    const auto s = rfft(x);
    CHECK(max_bin_diff(s.bins, oracle::naive_rdft(x)) < 1e-12);
    CHECK(std::abs(s.bins[1] - Complex(2.0, 0.0)) < 1e-12);

    const Spectrum given{{{0.0, 0.0}, {2.0, 0.0}, {0.0, 0.0}}, 4};
    const auto back = irfft(given);
    CHECK(oracle::max_abs_diff(back, x) < 1e-12);
    CHECK(oracle::max_abs_diff(back, oracle::naive_irdft(given.bins, 4)) < 1e-12);
    CHECK(amplitude_spectrum(given) == std::vector<double>{0.0, 2.0, 0.0});
}

TEST_CASE("amplitude is the modulus") {
    CHECK(amplitude_spectrum(Spectrum{{{3.0, 0.0}}, 1}) == std::vector<double>{3.0});
    // 3-4-5, with a bin that needs no zero imaginary part (N = 3, k = 1)
    const Spectrum s{{{1.0, 0.0}, {3.0, 4.0}}, 3};
    CHECK(amplitude_spectrum(s)[1] == doctest::Approx(5.0).epsilon(1e-15));

    std::mt19937_64 rng(5);
    const auto x = oracle::random_vector(rng, 37);
    const auto spec = rfft(x);
    const auto amp = amplitude_spectrum(spec);
    for (std::size_t k = 0; k < amp.size(); ++k)
        CHECK(amp[k] == doctest::Approx(std::sqrt(spec.bins[k].real() * spec.bins[k].real() +
                                                  spec.bins[k].imag() * spec.bins[k].imag()))
                            .epsilon(1e-14));
}

TEST_CASE("rfft matches the naive DFT for every length up to 256") {
    std::mt19937_64 rng(1);
    for (std::size_t n = 1; n <= 256; ++n) {
        for (int rep = 0; rep < 3; ++rep) {
            const auto x = oracle::random_vector(rng, n);
            const auto s = rfft(x);
            REQUIRE(s.bins.size() == n / 2 + 1);
            CHECK_MESSAGE(max_bin_diff(s.bins, oracle::naive_rdft(x)) < 1e-9, "n = " << n);
            CHECK_MESSAGE(oracle::max_abs_diff(irfft(s), x) < 1e-9, "n = " << n);
        }
    }
}

TEST_CASE("irfft matches the naive inverse on random Hermitian spectra") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    for (std::size_t n : {1u, 2u, 7u, 12u, 97u, 192u}) {
        Spectrum s{std::vector<Complex>(n / 2 + 1), n};
        for (auto& b : s.bins) b = {g(rng), g(rng)};
        s.bins[0].imag(0.0);
        if (n % 2 == 0) s.bins.back().imag(0.0);
        CHECK(oracle::max_abs_diff(irfft(s), oracle::naive_irdft(s.bins, n)) < 1e-9);
    }
}

TEST_CASE("round trip up to 4096 including awkward lengths") {
    std::mt19937_64 rng(3);
    std::vector<std::size_t> lengths{192, 288, 432, 816, 1000, 1021, 2048, 2310, 4093, 4096};
    for (int i = 0; i < 20; ++i) lengths.push_back(std::uniform_int_distribution<std::size_t>(257, 4096)(rng));
    for (std::size_t n : lengths) {
        const auto x = oracle::random_vector(rng, n, -50.0, 50.0);
        double scale = 0.0;
        for (double v : x) scale = std::max(scale, std::abs(v));
        CHECK_MESSAGE(oracle::max_abs_diff(irfft(rfft(x)), x) < 1e-9 * (1.0 + scale), "n = " << n);
    }
}

TEST_CASE("Parseval") {
    std::mt19937_64 rng(4);
    for (std::size_t n : {1u, 2u, 3u, 10u, 11u, 192u, 288u, 816u, 997u}) {
        const auto x = oracle::random_vector(rng, n);
        const auto s = rfft(x);
        double time = 0.0;
        for (double v : x) time += v * v;
        double freq = std::norm(s.bins[0]);
        for (std::size_t k = 1; k < s.bins.size(); ++k)
            freq += (n % 2 == 0 && k == n / 2) ? std::norm(s.bins[k]) : 2.0 * std::norm(s.bins[k]);
        freq /= static_cast<double>(n);
        CHECK(std::abs(time - freq) <= 1e-9 * time);
    }
}

TEST_CASE("linearity") {
    std::mt19937_64 rng(6);
    for (std::size_t n : {5u, 64u, 192u, 211u}) {
        const auto x = oracle::random_vector(rng, n);
        const auto y = oracle::random_vector(rng, n);
        const double a = 1.7, b = -0.3;
        std::vector<double> z(n);
        for (std::size_t i = 0; i < n; ++i) z[i] = a * x[i] + b * y[i];
        const auto sx = rfft(x), sy = rfft(y), sz = rfft(z);
        for (std::size_t k = 0; k < sz.bins.size(); ++k) CHECK(std::abs(sz.bins[k] - (a * sx.bins[k] + b * sy.bins[k])) < 1e-9);
    }
}

TEST_CASE("complex fft agrees with itself under inversion") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g;
    for (std::size_t n : {1u, 6u, 13u, 49u, 128u, 331u}) {
        std::vector<Complex> x(n);
        for (auto& v : x) v = {g(rng), g(rng)};
        auto back = fft(fft(x), true);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(back[i] / static_cast<double>(n) - x[i]) < 1e-9);
    }
}

TEST_CASE("DC and Nyquist imaginary parts are exactly zero") {
    std::mt19937_64 rng(8);
    for (std::size_t n : {2u, 8u, 192u, 250u}) {
        const auto s = rfft(oracle::random_vector(rng, n));
        CHECK(s.bins.front().imag() == 0.0);
        CHECK(s.bins.back().imag() == 0.0);
    }
}

TEST_CASE("error paths") {
    CHECK_THROWS_WITH_AS(rfft(std::vector<double>{}), "empty input", Error);
    CHECK_THROWS_WITH_AS(rfft(std::vector<double>{1.0, std::nan("")}), "non-finite sample", Error);
    CHECK_THROWS_WITH_AS(rfft(std::vector<double>{std::numeric_limits<double>::infinity()}), "non-finite sample",
                         Error);
    CHECK_THROWS_WITH_AS(irfft(Spectrum{{{1.0, 1e-6}, {0.0, 0.0}}, 2}), "malformed spectrum", Error);
    CHECK_THROWS_WITH_AS(irfft(Spectrum{{{1.0, 0.0}, {0.0, 0.5}}, 2}), "malformed spectrum", Error);
    CHECK_THROWS_WITH_AS(irfft(Spectrum{{{1.0, 0.0}}, 4}), "malformed spectrum", Error);
    CHECK_THROWS_WITH_AS(amplitude_spectrum(Spectrum{{{1.0, 2.0}}, 1}), "malformed spectrum", Error);
    // within tolerance is accepted
    CHECK_NOTHROW(irfft(Spectrum{{{1.0, 1e-13}, {0.0, 0.0}}, 2}));
}

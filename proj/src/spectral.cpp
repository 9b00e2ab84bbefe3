#include "fraug/spectral.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <numbers>

#include "fraug/error.hpp"

namespace fraug {
namespace {

constexpr double kImagTolerance = 1e-12;

std::vector<std::size_t> small_prime_factors(std::size_t n) {
    std::vector<std::size_t> factors;
    // Radix 4 first keeps the recursion shallow for the common 2^k * 3 lengths.
    while (n % 4 == 0) {
        factors.push_back(4);
        n /= 4;
    }
    for (std::size_t p : {2u, 3u, 5u, 7u}) {
        while (n % p == 0) {
            factors.push_back(p);
            n /= p;
        }
    }
    if (n != 1) return {};
    return factors;
}

// Precomputed state for one transform length.
struct Plan {
    std::size_t n = 0;
    std::vector<std::size_t> factors;  // empty => Bluestein
    std::vector<Complex> twiddles;     // exp(-2 pi i k / n), k < n

    // Bluestein only.
    std::size_t conv_len = 0;
    std::vector<Complex> chirp;          // exp(-pi i k^2 / n)
    std::vector<Complex> chirp_filter_fft;
};

std::shared_ptr<const Plan> make_plan(std::size_t n);

std::shared_ptr<const Plan> get_plan(std::size_t n) {
    thread_local std::map<std::size_t, std::shared_ptr<const Plan>> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    auto plan = make_plan(n);
    cache.emplace(n, plan);
    return plan;
}

// Plain complex product; std::complex's operator* takes the slow
// Annex G path for inf/nan handling.
inline Complex mul(Complex a, Complex b) {
    return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

inline Complex rotate(Complex w, bool inverse) { return inverse ? std::conj(w) : w; }

void mixed_radix(const Complex* in, std::size_t stride, Complex* out, std::size_t n, const std::size_t* factor,
                 const Plan& plan, std::size_t tw_stride, bool inverse) {
    if (n == 1) {
        out[0] = in[0];
        return;
    }
    const std::size_t p = *factor;
    const std::size_t m = n / p;
    for (std::size_t j = 0; j < p; ++j)
        mixed_radix(in + j * stride, stride * p, out + j * m, m, factor + 1, plan, tw_stride * p, inverse);

    // j * k * tw_stride < p * m * tw_stride == N, so no wrap-around is needed.
    const Complex* tw = plan.twiddles.data();
    const std::size_t root_step = m * tw_stride;  // N / p
    const double sign = inverse ? 1.0 : -1.0;

    switch (p) {
        case 2:
            for (std::size_t k = 0; k < m; ++k) {
                const Complex a = out[k];
                const Complex b = mul(out[m + k], rotate(tw[k * tw_stride], inverse));
                out[k] = a + b;
                out[m + k] = a - b;
            }
            return;
        case 3: {
            const double s3 = sign * std::sqrt(3.0) / 2.0;
            for (std::size_t k = 0; k < m; ++k) {
                const Complex a = out[k];
                const Complex b = mul(out[m + k], rotate(tw[k * tw_stride], inverse));
                const Complex c = mul(out[2 * m + k], rotate(tw[2 * k * tw_stride], inverse));
                const Complex sum = b + c;
                const Complex diff = b - c;
                const Complex mid = a - 0.5 * sum;
                const Complex rot{-s3 * diff.imag(), s3 * diff.real()};
                out[k] = a + sum;
                out[m + k] = mid + rot;
                out[2 * m + k] = mid - rot;
            }
            return;
        }
        case 4:
            for (std::size_t k = 0; k < m; ++k) {
                const Complex a0 = out[k];
                const Complex a1 = mul(out[m + k], rotate(tw[k * tw_stride], inverse));
                const Complex a2 = mul(out[2 * m + k], rotate(tw[2 * k * tw_stride], inverse));
                const Complex a3 = mul(out[3 * m + k], rotate(tw[3 * k * tw_stride], inverse));
                const Complex t0 = a0 + a2;
                const Complex t1 = a0 - a2;
                const Complex t2 = a1 + a3;
                const Complex d = a1 - a3;
                // multiply by -i (forward) or +i (inverse)
                const Complex t3{-sign * d.imag(), sign * d.real()};
                out[k] = t0 + t2;
                out[m + k] = t1 + t3;
                out[2 * m + k] = t0 - t2;
                out[3 * m + k] = t1 - t3;
            }
            return;
        default: break;
    }

    Complex scratch[7];
    for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t j = 0; j < p; ++j) scratch[j] = mul(out[j * m + k], rotate(tw[j * k * tw_stride], inverse));
        for (std::size_t q = 0; q < p; ++q) {
            Complex acc = scratch[0];
            std::size_t r = 0;  // (j * q) mod p, advanced incrementally
            for (std::size_t j = 1; j < p; ++j) {
                r += q;
                if (r >= p) r -= p;
                acc += mul(scratch[j], rotate(tw[r * root_step], inverse));
            }
            out[q * m + k] = acc;
        }
    }
}

std::vector<Complex> run_mixed_radix(const Plan& plan, std::span<const Complex> input, bool inverse) {
    std::vector<Complex> out(plan.n);
    mixed_radix(input.data(), 1, out.data(), plan.n, plan.factors.data(), plan, 1, inverse);
    return out;
}

std::vector<Complex> run_bluestein(const Plan& plan, std::span<const Complex> input, bool inverse) {
    const std::size_t n = plan.n;
    const auto conv = get_plan(plan.conv_len);
    std::vector<Complex> a(plan.conv_len, Complex{});
    for (std::size_t k = 0; k < n; ++k) {
        const Complex c = inverse ? std::conj(plan.chirp[k]) : plan.chirp[k];
        a[k] = mul(input[k], c);
    }
    auto fa = run_mixed_radix(*conv, a, false);
    for (std::size_t k = 0; k < plan.conv_len; ++k) {
        // The filter spectrum is stored for the forward direction; the inverse
        // direction uses the conjugate chirp, whose filter is the conjugate
        // of the forward filter evaluated at mirrored frequencies.
        const Complex f = inverse ? std::conj(plan.chirp_filter_fft[(plan.conv_len - k) % plan.conv_len])
                                  : plan.chirp_filter_fft[k];
        fa[k] = mul(fa[k], f);
    }
    auto conv_out = run_mixed_radix(*conv, fa, true);
    const double scale = 1.0 / static_cast<double>(plan.conv_len);
    std::vector<Complex> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        const Complex c = inverse ? std::conj(plan.chirp[k]) : plan.chirp[k];
        out[k] = mul(conv_out[k], c) * scale;
    }
    return out;
}

std::shared_ptr<const Plan> make_plan(std::size_t n) {
    auto plan = std::make_shared<Plan>();
    plan->n = n;
    plan->factors = small_prime_factors(n);
    plan->twiddles.resize(n);
    const double step = -2.0 * std::numbers::pi / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double angle = step * static_cast<double>(k);
        plan->twiddles[k] = {std::cos(angle), std::sin(angle)};
    }
    if (!plan->factors.empty() || n == 1) return plan;

    std::size_t m = 1;
    while (m < 2 * n - 1) m *= 2;
    plan->conv_len = m;
    plan->chirp.resize(n);
    const std::size_t two_n = 2 * n;
    for (std::size_t k = 0; k < n; ++k) {
        // k^2 mod 2n keeps the angle argument small and exact.
        const std::size_t k2 = (k * k) % two_n;  // exact for n < 2^32
        const double angle = -std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n);
        plan->chirp[k] = {std::cos(angle), std::sin(angle)};
    }
    std::vector<Complex> filter(m, Complex{});
    filter[0] = std::conj(plan->chirp[0]);
    for (std::size_t k = 1; k < n; ++k) {
        filter[k] = std::conj(plan->chirp[k]);
        filter[m - k] = std::conj(plan->chirp[k]);
    }
    plan->chirp_filter_fft = run_mixed_radix(*get_plan(m), filter, false);
    return plan;
}

}  // namespace

std::vector<Complex> fft(std::span<const Complex> input, bool inverse) {
    if (input.empty()) throw Error("empty input");
    const auto plan = get_plan(input.size());
    if (input.size() == 1) return {input[0]};
    if (!plan->factors.empty()) return run_mixed_radix(*plan, input, inverse);
    return run_bluestein(*plan, input, inverse);
}

Spectrum rfft(std::span<const double> signal) {
    if (signal.empty()) throw Error("empty input");
    std::vector<Complex> buffer(signal.size());
    for (std::size_t i = 0; i < signal.size(); ++i) {
        if (!std::isfinite(signal[i])) throw Error("non-finite sample");
        buffer[i] = {signal[i], 0.0};
    }
    const std::size_t n = signal.size();
    auto full = fft(buffer, false);
    Spectrum out;
    out.origin_len = n;
    out.bins.assign(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(one_sided_length(n)));
    // Real input: DC and (even N) Nyquist are real by symmetry.
    out.bins.front().imag(0.0);
    if (n % 2 == 0) out.bins.back().imag(0.0);
    return out;
}

void validate(const Spectrum& spectrum) {
    const std::size_t n = spectrum.origin_len;
    if (n == 0 || spectrum.bins.size() != one_sided_length(n)) throw Error("malformed spectrum");
    for (const auto& bin : spectrum.bins)
        if (!std::isfinite(bin.real()) || !std::isfinite(bin.imag())) throw Error("malformed spectrum");
    if (std::abs(spectrum.bins.front().imag()) > kImagTolerance) throw Error("malformed spectrum");
    if (n % 2 == 0 && std::abs(spectrum.bins.back().imag()) > kImagTolerance) throw Error("malformed spectrum");
}

std::vector<double> irfft(const Spectrum& spectrum) {
    validate(spectrum);
    const std::size_t n = spectrum.origin_len;
    std::vector<Complex> full(n);
    const std::size_t half = spectrum.bins.size();
    for (std::size_t k = 0; k < half; ++k) full[k] = spectrum.bins[k];
    full[0].imag(0.0);
    if (n % 2 == 0) full[half - 1].imag(0.0);
    for (std::size_t k = half; k < n; ++k) full[k] = std::conj(full[n - k]);
    const auto time = fft(full, true);
    std::vector<double> out(n);
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = time[i].real() * scale;
    return out;
}

std::vector<double> amplitude_spectrum(const Spectrum& spectrum) {
    validate(spectrum);
    std::vector<double> out;
    out.reserve(spectrum.bins.size());
    for (const auto& bin : spectrum.bins) out.push_back(std::abs(bin));
    return out;
}

}  // namespace fraug

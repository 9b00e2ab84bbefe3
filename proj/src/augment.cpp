#include "fraug/augment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "fraug/error.hpp"
#include "fraug/spectral.hpp"

namespace fraug {
namespace {

struct KindName {
    AugmentKind kind;
    const char* name;
};

constexpr KindName kKindNames[] = {
    {AugmentKind::None, "none"},
    {AugmentKind::FreqMask, "freq_mask"},
    {AugmentKind::FreqMix, "freq_mix"},
    {AugmentKind::FreqMaskKeepDominant, "freq_mask_keep_dominant"},
    {AugmentKind::FreqMaskThenMix, "freq_mask_then_mix"},
    {AugmentKind::Noise, "noise"},
    {AugmentKind::NoiseBoth, "noise_both"},
    {AugmentKind::TimeMaskRandom, "time_mask_random"},
    {AugmentKind::TimeMaskSegment, "time_mask_segment"},
    {AugmentKind::Flip, "flip"},
    {AugmentKind::Warp, "warp"},
    {AugmentKind::Asd, "asd"},
    {AugmentKind::Mbb, "mbb"},
};

const FrequencyMask& mask_for(std::span<const FrequencyMask> masks, std::size_t channel) {
    return masks.size() == 1 ? masks[0] : masks[channel];
}

void check_masks(std::span<const FrequencyMask> masks, std::size_t channels, std::size_t bins) {
    if (masks.size() != 1 && masks.size() != channels) throw Error("mask count does not match channel count");
    for (const auto& m : masks)
        if (m.size() != bins) throw Error("mask length does not match spectrum length");
}

std::vector<FrequencyMask> draw_masks(std::size_t channels, std::size_t bins, const AugmentSpec& spec, Rng& rng) {
    std::vector<FrequencyMask> masks;
    const std::size_t count = spec.shared_mask_across_channels ? 1 : channels;
    masks.reserve(count);
    for (std::size_t i = 0; i < count; ++i) masks.push_back(create_random_mask(bins, spec.rate, rng, spec.exact_count));
    return masks;
}

std::size_t window_len(const WindowSample& s) { return s.lookback_len() + s.horizon_len(); }

// Linear resampling of `src` onto `n` points with both endpoints aligned.
std::vector<double> resample_linear(std::span<const double> src, std::size_t n) {
    std::vector<double> out(n);
    if (src.size() == 1 || n == 1) {
        std::fill(out.begin(), out.end(), src.front());
        return out;
    }
    const double scale = static_cast<double>(src.size() - 1) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        const double pos = static_cast<double>(i) * scale;
        const auto lo = std::min(static_cast<std::size_t>(pos), src.size() - 2);
        const double frac = pos - static_cast<double>(lo);
        out[i] = src[lo] * (1.0 - frac) + src[lo + 1] * frac;
    }
    return out;
}

std::size_t fraction_count(double rate, std::size_t len) {
    return std::min(len, static_cast<std::size_t>(std::llround(rate * static_cast<double>(len))));
}

}  // namespace

std::string to_string(AugmentKind kind) {
    for (const auto& kn : kKindNames)
        if (kn.kind == kind) return kn.name;
    return "none";
}

AugmentKind parse_augment_kind(const std::string& name) {
    for (const auto& kn : kKindNames)
        if (name == kn.name) return kn.kind;
    throw Error("unknown augmentation kind '" + name + "'");
}

const std::vector<AugmentKind>& all_augment_kinds() {
    static const std::vector<AugmentKind> kinds = [] {
        std::vector<AugmentKind> k;
        for (const auto& kn : kKindNames) k.push_back(kn.kind);
        return k;
    }();
    return kinds;
}

bool needs_partner(AugmentKind kind) noexcept {
    return kind == AugmentKind::FreqMix || kind == AugmentKind::FreqMaskThenMix || kind == AugmentKind::Asd;
}

void validate(const AugmentSpec& spec) {
    if (!(spec.rate >= 0.0 && spec.rate <= 1.0)) throw Error("augmentation rate must lie in [0, 1]");
    if ((spec.kind == AugmentKind::FreqMix || spec.kind == AugmentKind::FreqMaskThenMix) && spec.rate > 0.5)
        throw Error("mix rate must not exceed 0.5");
    if (!(spec.noise_bound >= 0.0)) throw Error("noise bound must be non-negative");
    if (spec.kind == AugmentKind::Asd && spec.asd_k < 1) throw Error("ASD needs k >= 1");
}

std::size_t FrequencyMask::masked_count() const noexcept {
    return static_cast<std::size_t>(std::count(keep.begin(), keep.end(), false));
}

FrequencyMask create_random_mask(std::size_t len, double mu, Rng& rng, bool exact_count) {
    FrequencyMask mask{std::vector<bool>(len, true)};
    if (exact_count) {
        const auto k = std::min(len, static_cast<std::size_t>(std::ceil(mu * static_cast<double>(len) - 1e-12)));
        std::vector<std::size_t> idx(len);
        std::iota(idx.begin(), idx.end(), 0);
        // Partial Fisher-Yates: the first k entries are a uniform k-subset.
        for (std::size_t i = 0; i < k; ++i) {
            std::swap(idx[i], idx[i + uniform_index(rng, len - i)]);
            mask.keep[idx[i]] = false;
        }
        return mask;
    }
    for (std::size_t i = 0; i < len; ++i) mask.keep[i] = !(uniform01(rng) < mu);
    return mask;
}

WindowSample apply_frequency_mask(const WindowSample& sample, std::span<const FrequencyMask> masks) {
    const std::size_t n = window_len(sample);
    check_masks(masks, sample.channels(), one_sided_length(n));
    WindowSample out = sample;
    for (std::size_t c = 0; c < sample.channels(); ++c) {
        const auto& mask = mask_for(masks, c);
        auto spec = rfft(concatenated(sample, c));
        for (std::size_t k = 0; k < spec.bins.size(); ++k)
            if (!mask.keep[k]) spec.bins[k] = Complex{};
        assign_concatenated(out, c, irfft(spec));
    }
    return out;
}

WindowSample mix_with_mask(const WindowSample& first, const WindowSample& second,
                           std::span<const FrequencyMask> masks) {
    if (!first.same_shape(second)) throw Error("incompatible samples");
    const std::size_t n = window_len(first);
    check_masks(masks, first.channels(), one_sided_length(n));
    WindowSample out = first;
    for (std::size_t c = 0; c < first.channels(); ++c) {
        const auto& mask = mask_for(masks, c);
        auto s1 = rfft(concatenated(first, c));
        const auto s2 = rfft(concatenated(second, c));
        for (std::size_t k = 0; k < s1.bins.size(); ++k)
            if (!mask.keep[k]) s1.bins[k] = s2.bins[k];
        assign_concatenated(out, c, irfft(s1));
    }
    return out;
}

WindowSample freq_mask(const WindowSample& sample, const AugmentSpec& spec, Rng& rng) {
    const auto masks = draw_masks(sample.channels(), one_sided_length(window_len(sample)), spec, rng);
    return apply_frequency_mask(sample, masks);
}

WindowSample freq_mix(const WindowSample& first, const WindowSample& second, const AugmentSpec& spec, Rng& rng) {
    if (!first.same_shape(second)) throw Error("incompatible samples");
    if (spec.rate > 0.5) throw Error("mix rate must not exceed 0.5");
    const auto masks = draw_masks(first.channels(), one_sided_length(window_len(first)), spec, rng);
    return mix_with_mask(first, second, masks);
}

WindowSample freq_mask_keep_dominant(const WindowSample& sample, const AugmentSpec& spec, Rng& rng) {
    const std::size_t bins = one_sided_length(window_len(sample));
    auto drawn = draw_masks(sample.channels(), bins, spec, rng);
    std::vector<FrequencyMask> masks;
    masks.reserve(sample.channels());
    std::vector<std::size_t> order(bins);
    for (std::size_t c = 0; c < sample.channels(); ++c) {
        FrequencyMask mask = mask_for(drawn, c);
        const auto amp = amplitude_spectrum(rfft(concatenated(sample, c)));
        std::iota(order.begin(), order.end(), 0);
        const std::size_t top = std::min(spec.keep_top, bins);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return amp[a] > amp[b]; });
        for (std::size_t i = 0; i < top; ++i) mask.keep[order[i]] = true;
        masks.push_back(std::move(mask));
    }
    return apply_frequency_mask(sample, masks);
}

WindowSample freq_mask_then_mix(const WindowSample& first, const WindowSample& second, const AugmentSpec& spec,
                                Rng& rng) {
    const auto a = freq_mask(first, spec, rng);
    const auto b = freq_mask(second, spec, rng);
    return freq_mix(a, b, spec, rng);
}

WindowSample baseline_augment(const WindowSample& sample, const AugmentSpec& spec, Rng& rng) {
    WindowSample out = sample;
    const std::size_t b = sample.lookback_len();
    switch (spec.kind) {
        case AugmentKind::Noise:
        case AugmentKind::NoiseBoth: {
            std::uniform_real_distribution<double> u(-spec.noise_bound, spec.noise_bound);
            for (double& v : out.lookback.values()) v *= 1.0 + (spec.noise_bound > 0 ? u(rng) : 0.0);
            if (spec.kind == AugmentKind::NoiseBoth)
                for (double& v : out.horizon.values()) v *= 1.0 + (spec.noise_bound > 0 ? u(rng) : 0.0);
            break;
        }
        case AugmentKind::TimeMaskRandom: {
            const std::size_t k = fraction_count(spec.rate, b);
            std::vector<std::size_t> idx(b);
            std::iota(idx.begin(), idx.end(), 0);
            for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + uniform_index(rng, b - i)]);
            for (std::size_t c = 0; c < out.channels(); ++c)
                for (std::size_t i = 0; i < k; ++i) out.lookback(c, idx[i]) = 0.0;
            break;
        }
        case AugmentKind::TimeMaskSegment: {
            const std::size_t k = fraction_count(spec.rate, b);
            if (k == 0) break;
            const std::size_t start = uniform_index(rng, b - k + 1);
            for (std::size_t c = 0; c < out.channels(); ++c)
                for (std::size_t t = start; t < start + k; ++t) out.lookback(c, t) = 0.0;
            break;
        }
        case AugmentKind::Flip: {
            for (std::size_t c = 0; c < out.channels(); ++c) {
                auto row = out.lookback.row(c);
                const double mean = std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(b);
                for (double& v : row) v = 2.0 * mean - v;
            }
            break;
        }
        case AugmentKind::Warp: {
            if (b < 2) break;
            const std::size_t seg = std::clamp<std::size_t>(fraction_count(spec.rate, b), 2, b);
            const std::size_t start = uniform_index(rng, b - seg + 1);
            const double factor = uniform01(rng) < 0.5 ? 0.5 : 2.0;
            const auto new_len =
                std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(static_cast<double>(seg) * factor)));
            for (std::size_t c = 0; c < out.channels(); ++c) {
                const auto row = sample.lookback.row(c);
                std::vector<double> warped(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(start));
                const auto stretched = resample_linear(row.subspan(start, seg), new_len);
                warped.insert(warped.end(), stretched.begin(), stretched.end());
                warped.insert(warped.end(), row.begin() + static_cast<std::ptrdiff_t>(start + seg), row.end());
                const auto back = resample_linear(warped, b);
                std::copy(back.begin(), back.end(), out.lookback.row(c).begin());
            }
            break;
        }
        default:
            throw Error("'" + to_string(spec.kind) + "' is not a time-domain baseline augmentation");
    }
    return out;
}

double dtw_distance(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw Error("DTW of an empty series");
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> prev(b.size() + 1, inf);
    std::vector<double> cur(b.size() + 1, inf);
    prev[0] = 0.0;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = inf;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const double cost = std::abs(a[i - 1] - b[j - 1]);
            cur[j] = cost + std::min({prev[j], cur[j - 1], prev[j - 1]});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

double sample_dtw(const WindowSample& a, const WindowSample& b) {
    if (a.channels() != b.channels()) throw Error("incompatible samples");
    double total = 0.0;
    for (std::size_t c = 0; c < a.channels(); ++c) total += dtw_distance(concatenated(a, c), concatenated(b, c));
    return total;
}

WindowSample asd_combine(std::span<const WindowSample> pool, std::span<const double> distances, std::size_t k) {
    if (k < 1) throw Error("ASD needs k >= 1");
    if (pool.size() < k) throw Error("ASD pool too small: " + std::to_string(pool.size()) + " < k=" + std::to_string(k));
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return distances[x] < distances[y]; });

    double tau = 0.0;
    for (std::size_t i = 0; i < k; ++i) tau += distances[order[i]];
    tau /= static_cast<double>(k);

    std::vector<double> w(k, 1.0);
    if (tau > 0.0)
        for (std::size_t i = 0; i < k; ++i) w[i] = std::exp(-distances[order[i]] / tau);
    const double wsum = std::accumulate(w.begin(), w.end(), 0.0);

    WindowSample out = pool[order[0]];
    std::fill(out.lookback.values().begin(), out.lookback.values().end(), 0.0);
    std::fill(out.horizon.values().begin(), out.horizon.values().end(), 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        const auto& nb = pool[order[i]];
        if (!nb.same_shape(out)) throw Error("incompatible samples");
        const double wi = w[i] / wsum;
        for (std::size_t j = 0; j < out.lookback.size(); ++j) out.lookback.values()[j] += wi * nb.lookback.values()[j];
        for (std::size_t j = 0; j < out.horizon.size(); ++j) out.horizon.values()[j] += wi * nb.horizon.values()[j];
    }
    return out;
}

WindowSample asd_augment(const WindowSample& target, std::span<const WindowSample> pool, std::size_t k) {
    if (pool.size() < k) throw Error("ASD pool too small: " + std::to_string(pool.size()) + " < k=" + std::to_string(k));
    std::vector<double> d(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) d[i] = sample_dtw(target, pool[i]);
    WindowSample out = asd_combine(pool, d, k);
    out.start_index = target.start_index;
    return out;
}

Decomposition decompose(std::span<const double> series, std::size_t period) {
    if (period < 2) throw Error("decomposition period must be at least 2");
    const std::size_t n = series.size();
    if (n < 2 * period)
        throw Error("series of length " + std::to_string(n) + " is shorter than two periods (" +
                    std::to_string(2 * period) + ")");

    const std::size_t half = period / 2;
    const bool even = period % 2 == 0;
    Decomposition d;
    d.trend.assign(n, 0.0);
    for (std::size_t t = half; t + half < n; ++t) {
        double acc = 0.0;
        if (even) {
            acc = 0.5 * (series[t - half] + series[t + half]);
            for (std::size_t j = t - half + 1; j < t + half; ++j) acc += series[j];
        } else {
            for (std::size_t j = t - half; j <= t + half; ++j) acc += series[j];
        }
        d.trend[t] = acc / static_cast<double>(period);
    }
    const std::size_t first = half;
    const std::size_t last = n - 1 - half;
    for (std::size_t t = 0; t < first; ++t) d.trend[t] = d.trend[first];
    for (std::size_t t = last + 1; t < n; ++t) d.trend[t] = d.trend[last];

    std::vector<double> phase_sum(period, 0.0);
    std::vector<std::size_t> phase_count(period, 0);
    for (std::size_t t = first; t <= last; ++t) {
        phase_sum[t % period] += series[t] - d.trend[t];
        ++phase_count[t % period];
    }
    std::vector<double> phase_mean(period);
    for (std::size_t p = 0; p < period; ++p) phase_mean[p] = phase_sum[p] / static_cast<double>(phase_count[p]);
    const double centre = std::accumulate(phase_mean.begin(), phase_mean.end(), 0.0) / static_cast<double>(period);
    for (double& m : phase_mean) m -= centre;

    d.seasonal.resize(n);
    d.residual.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
        d.seasonal[t] = phase_mean[t % period];
        d.residual[t] = series[t] - (d.trend[t] + d.seasonal[t]);
    }
    return d;
}

std::size_t default_block_len(std::size_t residual_len) noexcept {
    return std::min(residual_len, std::max<std::size_t>(2, residual_len / 10));
}

std::vector<double> moving_block_bootstrap(std::span<const double> residual, std::size_t block_len, Rng& rng) {
    const std::size_t n = residual.size();
    if (block_len < 1 || block_len > n) throw Error("block length must lie in [1, residual length]");
    const std::size_t starts = n - block_len + 1;
    std::vector<double> out;
    out.reserve(n + block_len);
    while (out.size() < n) {
        const std::size_t s = starts == 1 ? 0 : uniform_index(rng, starts);
        out.insert(out.end(), residual.begin() + static_cast<std::ptrdiff_t>(s),
                   residual.begin() + static_cast<std::ptrdiff_t>(s + block_len));
    }
    out.resize(n);
    return out;
}

Decomposition mbb_components(std::span<const double> series, std::size_t period, std::size_t block_len, Rng& rng) {
    Decomposition d = decompose(series, period);
    const std::size_t len = block_len == 0 ? default_block_len(series.size()) : block_len;
    d.residual = moving_block_bootstrap(d.residual, len, rng);
    return d;
}

WindowSample mbb_augment(const WindowSample& sample, std::size_t period, std::size_t block_len, Rng& rng) {
    WindowSample out = sample;
    for (std::size_t c = 0; c < sample.channels(); ++c) {
        const auto d = mbb_components(concatenated(sample, c), period, block_len, rng);
        std::vector<double> series(d.trend.size());
        for (std::size_t t = 0; t < series.size(); ++t) series[t] = d.trend[t] + d.seasonal[t] + d.residual[t];
        assign_concatenated(out, c, series);
    }
    return out;
}

WindowSample augment_sample(std::span<const WindowSample> pool, std::size_t index, const AugmentSpec& spec,
                            Rng& rng) {
    const WindowSample& sample = pool[index];
    auto partner = [&]() -> const WindowSample& { return pool[uniform_index(rng, pool.size())]; };
    switch (spec.kind) {
        case AugmentKind::None: return sample;
        case AugmentKind::FreqMask: return freq_mask(sample, spec, rng);
        case AugmentKind::FreqMaskKeepDominant: return freq_mask_keep_dominant(sample, spec, rng);
        case AugmentKind::FreqMix: {
            const auto& other = partner();
            return freq_mix(sample, other, spec, rng);
        }
        case AugmentKind::FreqMaskThenMix: {
            const auto& other = partner();
            return freq_mask_then_mix(sample, other, spec, rng);
        }
        case AugmentKind::Mbb: return mbb_augment(sample, spec.period, spec.block_len, rng);
        case AugmentKind::Asd: {
            std::vector<std::size_t> candidates;
            candidates.reserve(pool.size());
            for (std::size_t i = 0; i < pool.size(); ++i)
                if (i != index) candidates.push_back(i);
            if (spec.asd_pool != 0 && candidates.size() > spec.asd_pool) {
                for (std::size_t i = 0; i < spec.asd_pool; ++i)
                    std::swap(candidates[i], candidates[i + uniform_index(rng, candidates.size() - i)]);
                candidates.resize(spec.asd_pool);
            }
            std::vector<WindowSample> neighbours;
            neighbours.reserve(candidates.size());
            for (auto i : candidates) neighbours.push_back(pool[i]);
            return asd_augment(sample, neighbours, std::min(spec.asd_k, std::max<std::size_t>(1, neighbours.size())));
        }
        default: return baseline_augment(sample, spec, rng);
    }
}

}  // namespace fraug

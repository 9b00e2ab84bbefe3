#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fraug/dataset.hpp"
#include "fraug/rng.hpp"

namespace fraug {

enum class AugmentKind {
    None,
    FreqMask,
    FreqMix,
    FreqMaskKeepDominant,
    FreqMaskThenMix,
    Noise,
    NoiseBoth,
    TimeMaskRandom,
    TimeMaskSegment,
    Flip,
    Warp,
    Asd,
    Mbb,
};

std::string to_string(AugmentKind kind);
AugmentKind parse_augment_kind(const std::string& name);
const std::vector<AugmentKind>& all_augment_kinds();

// Kinds that need another training sample (or a pool of them).
bool needs_partner(AugmentKind kind) noexcept;

struct AugmentSpec {
    AugmentKind kind = AugmentKind::None;
    double rate = 0.0;  // mask / mix / segment rate
    bool shared_mask_across_channels = true;
    bool exact_count = false;  // mask exactly ceil(rate * len) bins instead of Bernoulli(rate)
    std::size_t keep_top = 10;
    std::uint64_t seed = 0;

    double noise_bound = 0.05;   // multiplicative noise amplitude
    std::size_t period = 24;     // decomposition period for MBB
    std::size_t block_len = 0;   // 0 => max(2, residual_len / 10)
    std::size_t asd_k = 5;
    std::size_t asd_pool = 64;   // candidates scanned per ASD target; 0 => whole set
};

// Throws fraug::Error when the rate is out of range for the kind.
void validate(const AugmentSpec& spec);

struct FrequencyMask {
    std::vector<bool> keep;  // true = bin kept

    std::size_t size() const noexcept { return keep.size(); }
    std::size_t masked_count() const noexcept;
};

FrequencyMask create_random_mask(std::size_t len, double mu, Rng& rng, bool exact_count = false);

// Zeroes the bins not kept by `masks` in every channel. `masks` holds either
// one mask shared by all channels or one per channel.
WindowSample apply_frequency_mask(const WindowSample& sample, std::span<const FrequencyMask> masks);

// Bin k of the result comes from `first` when mask.keep[k], else from `second`.
WindowSample mix_with_mask(const WindowSample& first, const WindowSample& second,
                           std::span<const FrequencyMask> masks);

WindowSample freq_mask(const WindowSample& sample, const AugmentSpec& spec, Rng& rng);
WindowSample freq_mix(const WindowSample& first, const WindowSample& second, const AugmentSpec& spec, Rng& rng);
WindowSample freq_mask_keep_dominant(const WindowSample& sample, const AugmentSpec& spec, Rng& rng);
WindowSample freq_mask_then_mix(const WindowSample& first, const WindowSample& second, const AugmentSpec& spec,
                                Rng& rng);

// Time-domain baselines: noise, noise_both, time_mask_random,
// time_mask_segment, flip, warp. Only noise_both touches the horizon.
WindowSample baseline_augment(const WindowSample& sample, const AugmentSpec& spec, Rng& rng);

double dtw_distance(std::span<const double> a, std::span<const double> b);
// Sum over channels of the DTW distance between concatenated windows.
double sample_dtw(const WindowSample& a, const WindowSample& b);

// Softmin-weighted average of the k nearest pool samples (look-back and
// horizon alike). Temperature is the mean of the k distances.
WindowSample asd_augment(const WindowSample& target, std::span<const WindowSample> pool, std::size_t k);
// Same, with the distances to every pool entry already known.
WindowSample asd_combine(std::span<const WindowSample> pool, std::span<const double> distances, std::size_t k);

struct Decomposition {
    std::vector<double> trend;
    std::vector<double> seasonal;
    std::vector<double> residual;
};

// Classical additive decomposition: centred moving average trend (2xp for
// even p), edges filled with the nearest fully supported trend value;
// per-phase mean of the detrended interior as seasonal; residual is the rest.
Decomposition decompose(std::span<const double> series, std::size_t period);

std::size_t default_block_len(std::size_t residual_len) noexcept;
std::vector<double> moving_block_bootstrap(std::span<const double> residual, std::size_t block_len, Rng& rng);

// Decomposition of `series` with its residual replaced by a block bootstrap.
// Trend and seasonal are the input's, untouched.
Decomposition mbb_components(std::span<const double> series, std::size_t period, std::size_t block_len, Rng& rng);
WindowSample mbb_augment(const WindowSample& sample, std::size_t period, std::size_t block_len, Rng& rng);

// Single augmentation of `pool[index]` according to `spec`. Partners for
// mixing and neighbours for ASD come from `pool`.
WindowSample augment_sample(std::span<const WindowSample> pool, std::size_t index, const AugmentSpec& spec,
                            Rng& rng);

}  // namespace fraug

namespace fraug {

// Originals first, then factor-1 rounds with one augmented copy of every
// sample per round. Freq-mix partners are drawn uniformly from `samples`.
// Runs the parallel kernel; see kernels::serial::expand_dataset.
std::vector<WindowSample> expand_dataset(std::span<const WindowSample> samples, const AugmentSpec& spec,
                                         std::size_t factor, Rng& rng);

}  // namespace fraug

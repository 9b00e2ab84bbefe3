#pragma once

// Data-parallel hot loops. Every kernel has an OpenMP version and a serial
// reference in kernels::serial with the same contract; tests compare the two.
//
// The parallel reductions work on fixed-size chunks merged in chunk order, so
// their results do not depend on the thread count.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fraug/augment.hpp"
#include "fraug/forecaster.hpp"

namespace fraug::kernels {

inline constexpr std::size_t kChunk = 8;

// Mean squared error of the batch; gradients of that mean are written to
// `grads` (overwritten).
double loss_and_gradients(const DLinearModel& model, std::span<const WindowSample> batch, Gradients& grads);

Metrics evaluate(const DLinearModel& model, std::span<const WindowSample> samples);

std::vector<double> dtw_to_pool(const WindowSample& target, std::span<const WindowSample> pool);

// One augmented copy of pool[indices[i]] per i; task i draws from
// derive_seed(master_seed, indices[i], round).
std::vector<WindowSample> augment_batch(std::span<const WindowSample> pool, std::span<const std::size_t> indices,
                                        const AugmentSpec& spec, std::uint64_t master_seed, std::uint64_t round);

std::vector<WindowSample> expand_dataset(std::span<const WindowSample> samples, const AugmentSpec& spec,
                                         std::size_t factor, Rng& rng);

int max_threads();

namespace serial {

double loss_and_gradients(const DLinearModel& model, std::span<const WindowSample> batch, Gradients& grads);
Metrics evaluate(const DLinearModel& model, std::span<const WindowSample> samples);
std::vector<double> dtw_to_pool(const WindowSample& target, std::span<const WindowSample> pool);
std::vector<WindowSample> augment_batch(std::span<const WindowSample> pool, std::span<const std::size_t> indices,
                                        const AugmentSpec& spec, std::uint64_t master_seed, std::uint64_t round);
std::vector<WindowSample> expand_dataset(std::span<const WindowSample> samples, const AugmentSpec& spec,
                                         std::size_t factor, Rng& rng);

}  // namespace serial
}  // namespace fraug::kernels

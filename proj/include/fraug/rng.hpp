#pragma once

#include <cstdint>
#include <random>

namespace fraug {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Seed for an independent stream owned by one (sample, round) task. A plain
// XOR of the three values would collide for swapped index/round pairs, so
// each component is mixed before combining.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index, std::uint64_t round) noexcept {
    return splitmix64(master ^ splitmix64(index ^ splitmix64(round + 0x5851f42d4c957f2dULL)));
}

inline double uniform01(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace fraug

#pragma once

#include <cstdint>
#include <random>

namespace confide {

/// SplitMix64 finalizer, used to derive decorrelated sub-seeds.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Engine for one logical stream (a dataset row, a learning-curve cell).
/// Streams are keyed by (seed, index[, index2]), so generation can run in
/// parallel with any schedule and still produce identical output.
inline std::mt19937_64 sub_rng(std::uint64_t seed, std::uint64_t index,
                               std::uint64_t index2 = 0) {
    return std::mt19937_64(mix64(mix64(seed ^ 0x5851f42d4c957f2dULL) ^ mix64(index) ^
                                 mix64(index2 * 0xda942042e4dd58b5ULL + 1)));
}

} // namespace confide

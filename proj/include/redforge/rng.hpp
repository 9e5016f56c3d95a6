#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace redforge {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

/// Independent seed for draw `index` of a stream rooted at `seed`.
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

/// Per-stage seed derived from the global seed by a stable hash of the stage name.
inline std::uint64_t stage_seed(std::uint64_t seed, std::string_view stage) {
    return splitmix64(seed ^ fnv1a(stage));
}

using Rng = std::mt19937_64;

/// Uniform integer in [0, n) without the implementation-defined behaviour of
/// std::uniform_int_distribution, so results match across standard libraries.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
        v = rng();
    } while (v >= limit);
    return v % n;
}

}  // namespace redforge

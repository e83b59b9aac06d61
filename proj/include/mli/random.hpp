#pragma once

// Deterministic random helpers. The standard distributions are
// implementation-defined, so the few we need are spelled out here to keep
// results identical across standard libraries.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace mli {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Mixes a base seed with any number of stream identifiers.
template <typename... Ids>
std::uint64_t deriveSeed(std::uint64_t seed, Ids... ids) noexcept {
    std::uint64_t h = splitmix64(seed);
    ((h = splitmix64(h ^ static_cast<std::uint64_t>(ids))), ...);
    return h;
}

/// Uniform in [0, 1) with 53 random bits.
inline double uniformUnit(Rng& rng) noexcept {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, bound) by rejection, bound > 0.
inline std::uint64_t uniformBelow(Rng& rng, std::uint64_t bound) noexcept {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t r;
    do {
        r = rng();
    } while (r >= limit);
    return r % bound;
}

/// Standard normal via Box-Muller (one draw per call).
inline double standardNormal(Rng& rng) noexcept {
    double u1;
    do {
        u1 = uniformUnit(rng);
    } while (u1 <= 0.0);
    const double u2 = uniformUnit(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

/// Fisher-Yates permutation of [0, n).
inline std::vector<std::size_t> shuffledIndices(std::size_t n, Rng& rng) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniformBelow(rng, i));
        std::swap(order[i - 1], order[j]);
    }
    return order;
}

}  // namespace mli

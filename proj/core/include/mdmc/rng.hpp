#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace mdmc::rng {

// Counter-based generator: the SplitMix64 finalizer applied to
// seed + phi64 * (counter + 1), where phi64 = 0x9E3779B97F4A7C15.
// A draw is a pure function of (seed, counter), so streams can be split by
// assigning disjoint counters (e.g. counter = i * n + j for entry (i, j))
// and results are identical across platforms and thread layouts.
inline std::uint64_t mix(std::uint64_t seed, std::uint64_t counter) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (counter + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Uniform draw in [0, 1) from the given stream position.
inline double uniform01(std::uint64_t seed, std::uint64_t counter) {
    return static_cast<double>(mix(seed, counter) >> 11) * 0x1.0p-53;
}

/// Uniform draw in [lo, hi).
inline double uniform(std::uint64_t seed, std::uint64_t counter, double lo, double hi) {
    return lo + (hi - lo) * uniform01(seed, counter);
}

/// Standard normal draw (Box-Muller on two derived substreams).
inline double normal(std::uint64_t seed, std::uint64_t counter) {
    const double u1 = uniform01(seed ^ 0x5851F42D4C957F2DULL, counter);
    const double u2 = uniform01(seed ^ 0x14057B7EF767814FULL, counter);
    // 1 - u1 lies in (0, 1], keeping the log argument away from zero
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    return r * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace mdmc::rng

#pragma once

#include <cmath>
#include <cstdint>

namespace gradcodec::rng {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

// SplitMix64 finalizer.  Full avalanche; the basis of all randomness here.
inline constexpr std::uint64_t mix(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ull;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebull;
    x ^= x >> 31;
    return x;
}

// Stateless counter-based generator.  bits(ctr) is a pure function of
// (seed, ctr), so element-parallel evaluation in any order reproduces the
// sequential stream bit-for-bit.
struct Counter {
    std::uint64_t base;

    explicit Counter(std::uint64_t seed) : base(mix(seed + kGolden)) {}

    std::uint64_t bits(std::uint64_t ctr) const { return mix(base ^ (ctr * kGolden)); }

    // Uniform in [0, 1) with 53 random bits.
    double u01(std::uint64_t ctr) const {
        return static_cast<double>(bits(ctr) >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; consumes counters 2*ctr and 2*ctr+1.
    double normal(std::uint64_t ctr) const {
        double u1 = u01(2 * ctr);
        double u2 = u01(2 * ctr + 1);
        double r = std::sqrt(-2.0 * std::log(1.0 - u1));
        return r * std::cos(6.283185307179586476925287 * u2);
    }
};

// Derives an independent child seed (per repetition, per stream).
inline std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
    return mix(seed ^ mix(stream + kGolden));
}

}  // namespace gradcodec::rng

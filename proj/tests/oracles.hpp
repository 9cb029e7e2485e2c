#pragma once

// Test-only reference routes, kept independent of the library paths they
// check: quadrature instead of closed forms, direct integrals instead of
// assembled formulas.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "gradcodec/rng.hpp"

namespace oracles {

inline double phi_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// Sparsity as the epsilon-averaged lognormal CDF at alpha*eps, midpoint rule.
inline double sparsity_quadrature(double alpha, double mu, double sigma, int k = 1000) {
    double acc = 0.0;
    for (int i = 0; i < k; ++i) {
        double eps = (i + 0.5) / k;
        acc += phi_cdf((std::log(alpha * eps) - mu) / sigma);
    }
    return acc / k;
}

// Exact mean relative mantissa distortion E[|q(m)-m|/m] for a log-uniform
// mantissa on [1,2) rounded to the grid {1 + j*2^-n1} with carry to 2.
inline double mantissa_distortion_exact(int n1) {
    const double d = std::ldexp(1.0, -n1);
    auto seg = [](double lo, double hi, double g) {
        // integral of |m-g|/m^2 over [lo,hi] with g outside or at an endpoint
        if (lo >= g) return (std::log(hi) + g / hi) - (std::log(lo) + g / lo);
        return (-g / hi - std::log(hi)) - (-g / lo - std::log(lo));
    };
    double total = 0.0;
    int cells = 1 << n1;
    for (int j = 0; j <= cells; ++j) {
        double g = 1.0 + j * d;
        double lo = std::max(1.0, g - d / 2), hi = std::min(2.0, g + d / 2);
        if (lo >= hi) continue;
        if (lo < g && g < hi)
            total += seg(lo, g, g) + seg(g, hi, g);
        else
            total += seg(lo, hi, g);
    }
    return total / std::numbers::ln2;
}

// Signed log-Laplace samples: ln|x| ~ Laplace(loc, scale).
inline std::vector<float> sample_loglaplace(std::size_t n, double loc, double scale,
                                            std::uint64_t seed) {
    gradcodec::rng::Counter rgen(seed);
    std::vector<float> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        double u = rgen.u01(2 * i) - 0.5;
        double lg = loc - scale * (u < 0 ? 1.0 : -1.0) * std::log(1.0 - 2.0 * std::fabs(u));
        double v = std::exp(lg);
        if (rgen.bits(2 * i + 1) & 1) v = -v;
        out[i] = static_cast<float>(v);
    }
    return out;
}

}  // namespace oracles

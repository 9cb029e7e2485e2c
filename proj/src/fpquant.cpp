#include "gradcodec/fpquant.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "gradcodec/kernels.hpp"
#include "gradcodec/parallel.hpp"

namespace gradcodec::fpquant {

namespace {

constexpr double kLn2 = std::numbers::ln2;
constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kSqrtPi = 1.7724538509055160273;

double log_erfc(double z) {
    if (z < 25.0) return std::log(std::erfc(z));
    // asymptotic tail, erfc(z) ~ exp(-z^2) / (z sqrt(pi)) * (1 - 1/(2z^2))
    return -z * z - std::log(z * kSqrtPi) + std::log1p(-0.5 / (z * z));
}

// E1(x) = -Ei(-x) for x > 0.
double expint_e1(double x) {
    if (x > 700.0) return 0.0;
    return -std::expint(-x);
}

// Mean relative mantissa distortion: noise uniform over half a grid step,
// times E[1/m] = 1/(2 ln 2) for a log-uniform mantissa.
double mantissa_term(int n1) { return 1.0 / (8.0 * kLn2 * std::ldexp(1.0, n1)); }

}  // namespace

double quantize_value(double x, const FpFormat& fmt) {
    if (!std::isfinite(x)) throw std::invalid_argument("quantize_value: non-finite input");
    if (x == 0.0) return 0.0;
    const int emax = fmt.e_max();
    const double ax = std::fabs(x);
    int e = std::ilogb(ax);
    if (e >= emax) return std::copysign(std::ldexp(1.0, emax), x);
    if (e < -emax) return 0.0;
    double m = std::scalbn(ax, -e);  // in [1,2)
    double j = std::nearbyint((m - 1.0) * std::ldexp(1.0, fmt.mantissa_bits));
    if (j >= std::ldexp(1.0, fmt.mantissa_bits)) {  // carried to 2.0, i.e. next binade
        j = 0.0;
        ++e;
    }
    double mq = 1.0 + j * fmt.delta();
    return std::copysign(std::ldexp(mq, e), x);
}

QuantizedTensor quantize_tensor(std::span<const float> values, const FpFormat& fmt,
                                const ScaleSpec& scale) {
    QuantizedTensor out;
    out.format = fmt;
    out.values.resize(values.size());

    double mu_l = 0.0;
    switch (scale.mode) {
        case ScaleMode::none:
            break;
        case ScaleMode::fixed:
            if (!(scale.c > 0.0)) throw std::invalid_argument("quantize_tensor: fixed scale must be > 0");
            mu_l = -std::log2(scale.c);
            break;
        case ScaleMode::per_layer:
            mu_l = gradient_scale(values, fmt.exponent_bits).mu_l;
            break;
    }
    out.scale_log2 = mu_l;
    const float pre = static_cast<float>(std::exp2(-mu_l));
    const float post = static_cast<float>(std::exp2(mu_l));

    if (fmt.exponent_bits >= 1 && fmt.exponent_bits <= 7 && fmt.mantissa_bits <= 22) {
        auto kernel = kernels::active_quantize();
        std::vector<kernels::QuantizeCounts> partial((values.size() >> 16) + 1);
        parallel_for(0, values.size(), [&](std::size_t lo, std::size_t hi) {
            kernel(values.data() + lo, out.values.data() + lo, hi - lo, fmt.mantissa_bits,
                   fmt.exponent_bits, pre, post, partial[lo >> 16]);
        });
        for (const auto& p : partial) {
            out.stats.overflow_count += p.overflow;
            out.stats.underflow_count += p.underflow;
        }
    } else {
        // outside the float32 fast-path envelope; element-wise double route
        for (std::size_t i = 0; i < values.size(); ++i) {
            double y = static_cast<double>(values[i]) * pre;
            double q = quantize_value(y, fmt);
            if (y != 0.0) {
                int e = std::ilogb(std::fabs(y));
                if (e >= fmt.e_max()) out.stats.overflow_count++;
                if (e < -fmt.e_max()) out.stats.underflow_count++;
            }
            out.values[i] = static_cast<float>(q * post);
        }
    }

    double err = parallel_sum(0, values.size(), [&](std::size_t lo, std::size_t hi) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            double x = values[i];
            if (x != 0.0) s += std::fabs(out.values[i] - x) / std::fabs(x);
        }
        return s;
    });
    std::uint64_t nonzero = 0;
    for (float v : values) nonzero += (v != 0.0f);
    out.stats.mean_relative_error = nonzero ? err / static_cast<double>(nonzero) : 0.0;
    return out;
}

GradientScale gradient_scale(std::span<const float> values, int exponent_bits) {
    if (exponent_bits < 2)
        throw std::invalid_argument("gradient_scale: need at least 2 exponent bits");
    float max_abs = 0.0f;
    for (float v : values) max_abs = std::max(max_abs, std::fabs(v));
    if (max_abs == 0.0f) throw std::invalid_argument("gradient_scale: all-zero tensor");
    GradientScale g;
    g.mu_l = static_cast<double>(std::ilogb(max_abs)) / static_cast<double>(exponent_bits - 1);
    g.factor = std::exp2(g.mu_l);
    return g;
}

double expected_relative_error_lognormal(double sigma, int n1, int n2) {
    if (!(sigma > 0.0)) throw std::invalid_argument("expected_relative_error: sigma must be > 0");
    if (n1 < 0 || n2 < 1) throw std::invalid_argument("expected_relative_error: need n1 >= 0, n2 >= 1");
    const double s2 = sigma / kLn2;  // std of log2|x|
    const double emax = std::ldexp(1.0, n2 - 1);
    const double u = emax / (kSqrt2 * s2);
    // overflow correction: 2^(E-1) e^{s^2 ln^2(2)/2} erfc(s ln2/sqrt2 + u),
    // assembled in log space against the exploding prefactor
    const double z = s2 * kLn2 / kSqrt2 + u;
    const double g = std::exp((emax - 1.0) * kLn2 + 0.5 * s2 * s2 * kLn2 * kLn2 + log_erfc(z));
    return mantissa_term(n1) * std::erf(u) + std::erfc(u) - g;
}

double expected_relative_error_normal(double sigma, int n1, int n2) {
    if (!(sigma > 0.0)) throw std::invalid_argument("expected_relative_error: sigma must be > 0");
    if (n1 < 0 || n2 < 1) throw std::invalid_argument("expected_relative_error: need n1 >= 0, n2 >= 1");
    const double emax = std::ldexp(1.0, n2 - 1);
    const double u = std::exp2(emax) / (kSqrt2 * sigma);
    const double v = std::exp2(-emax) / (kSqrt2 * sigma);
    const double under = std::erf(v);
    double over = 0.0;
    if (u < 26.0) over = std::erfc(u) - u * expint_e1(u * u) / kSqrtPi;
    return mantissa_term(n1) * (std::erf(u) - std::erf(v)) + over + under;
}

double expected_relative_error(double sigma, int n1, int n2, Prior prior) {
    return prior == Prior::lognormal ? expected_relative_error_lognormal(sigma, n1, n2)
                                     : expected_relative_error_normal(sigma, n1, n2);
}

FpFormat optimal_allocation(double sigma, int total_bits, Prior prior) {
    if (total_bits < 2) throw std::invalid_argument("optimal_allocation: need at least 2 bits");
    FpFormat best;
    double best_err = 0.0;
    bool first = true;
    for (int n2 = 1; n2 <= total_bits - 1; ++n2) {
        int n1 = total_bits - 1 - n2;
        double err = expected_relative_error(sigma, n1, n2, prior);
        if (first || err < best_err) {
            best = FpFormat(n2, n1);
            best_err = err;
            first = false;
        }
    }
    return best;
}

std::vector<AllocationRow> allocation_table(double sigma_lo, double sigma_hi, double step,
                                            const std::vector<int>& bit_widths, Prior prior) {
    if (!(sigma_lo > 0.0) || sigma_hi < sigma_lo || !(step > 0.0))
        throw std::invalid_argument("allocation_table: bad sigma range");
    std::vector<AllocationRow> rows;
    for (double s = sigma_lo; s <= sigma_hi + 1e-12; s += step) {
        for (int n : bit_widths) {
            AllocationRow row;
            row.sigma = s;
            row.total_bits = n;
            row.format = optimal_allocation(s, n, prior);
            row.expected_error =
                expected_relative_error(s, row.format.mantissa_bits, row.format.exponent_bits, prior);
            rows.push_back(row);
        }
    }
    return rows;
}

}  // namespace gradcodec::fpquant

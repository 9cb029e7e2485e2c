#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gradcodec/format.hpp"
#include "gradcodec/tensor.hpp"

namespace gradcodec::fpquant {

enum class Prior { lognormal, normal };

enum class ScaleMode { none, fixed, per_layer };

struct ScaleSpec {
    ScaleMode mode = ScaleMode::none;
    double c = 1.0;  // fixed-mode multiplier, must be > 0
};

struct QuantizeStats {
    std::uint64_t overflow_count = 0;
    std::uint64_t underflow_count = 0;
    double mean_relative_error = 0.0;  // mean of |q(x)-x|/|x| over nonzero x
};

struct QuantizedTensor {
    std::vector<float> values;
    FpFormat format;
    double scale_log2 = 0.0;
    QuantizeStats stats;
};

struct GradientScale {
    double mu_l = 0.0;    // log2 of the applied scale
    double factor = 1.0;  // 2^mu_l
};

// Quantizes one value to sign/exponent/mantissa form: |x| = m * 2^E with
// m in [1,2); exponents clamp to +/-2^E_max at the top and flush to zero
// strictly below -E_max; the mantissa rounds to the grid {1 + j*2^-n1}
// (nearest, ties to even, carry into the next binade on rounding to 2).
double quantize_value(double x, const FpFormat& fmt);

// Element-wise quantization of a tensor with optional pre-scaling.  The
// per-layer mode divides by 2^mu_l before quantizing and multiplies back
// after; fixed mode multiplies by c and divides back.
QuantizedTensor quantize_tensor(std::span<const float> values, const FpFormat& fmt,
                                const ScaleSpec& scale = {});

// Per-layer scale exponent: mu_l = floor(log2 max|X|) / log2(E_max).
// Requires a nonzero element and exponent_bits >= 2.
GradientScale gradient_scale(std::span<const float> values, int exponent_bits);

// Closed-form expected relative quantization error for magnitudes whose
// natural-log is N(0, sigma^2).  sigma is the std of ln|x|.
double expected_relative_error_lognormal(double sigma, int n1, int n2);

// Same under a N(0, sigma^2) value prior (half-normal magnitudes).
double expected_relative_error_normal(double sigma, int n1, int n2);

double expected_relative_error(double sigma, int n1, int n2, Prior prior);

// Best exponent/mantissa split for N total bits: argmin over n2 in 1..N-1,
// ties toward smaller n2.
FpFormat optimal_allocation(double sigma, int total_bits, Prior prior = Prior::lognormal);

struct AllocationRow {
    double sigma = 0.0;
    int total_bits = 0;
    FpFormat format;
    double expected_error = 0.0;
};

std::vector<AllocationRow> allocation_table(double sigma_lo, double sigma_hi, double step,
                                            const std::vector<int>& bit_widths,
                                            Prior prior = Prior::lognormal);

}  // namespace gradcodec::fpquant

#include <bit>
#include <cmath>

#include "gradcodec/kernels.hpp"
#include "gradcodec/rng.hpp"

namespace gradcodec::kernels {

namespace {

// Integer-exact quantization of one float32.  Mantissa rounding is done on
// the 23-bit mantissa field (round to nearest, ties to even on the grid
// index), so the result is bit-reproducible across backends.
inline float quantize_one(float y, int n1, int n2, QuantizeCounts& counts) {
    std::uint32_t b = std::bit_cast<std::uint32_t>(y);
    std::uint32_t sign = b & 0x80000000u;
    int e8 = static_cast<int>((b >> 23) & 0xffu);
    std::uint32_t mant = b & 0x7fffffu;
    int emax = 1 << (n2 - 1);

    if (e8 == 0) {  // zero or subnormal; subnormals sit far below 2^-emax
        if (mant != 0 || (b & 0x7fffffffu) != 0) counts.underflow++;
        return 0.0f;
    }
    int e = e8 - 127;
    if (e >= emax) {
        counts.overflow++;
        return std::bit_cast<float>(sign | (static_cast<std::uint32_t>(emax + 127) << 23));
    }
    if (e < -emax) {
        counts.underflow++;
        return 0.0f;
    }
    int shift = 23 - n1;
    std::uint32_t j = mant >> shift;
    std::uint32_t rem = mant & ((1u << shift) - 1u);
    std::uint32_t half = 1u << (shift - 1);
    if (rem > half || (rem == half && (j & 1u)))
        ++j;
    if (j == (1u << n1)) {  // mantissa rounded up to 2.0: carry into next binade
        j = 0;
        ++e;                // e <= emax here, and 2^emax is the clamp value itself
    }
    return std::bit_cast<float>(sign | (static_cast<std::uint32_t>(e + 127) << 23) | (j << shift));
}

}  // namespace

void quantize_scalar(const float* in, float* out, std::size_t n, int n1, int n2, float pre,
                     float post, QuantizeCounts& counts) {
    for (std::size_t i = 0; i < n; ++i) {
        float y = in[i] * pre;
        out[i] = quantize_one(y, n1, n2, counts) * post;
    }
}

void prune_scalar(const float* in, float* out, std::size_t n, float alpha, std::uint64_t seed,
                  std::uint64_t index_offset) {
    rng::Counter rgen(seed);
    const double a = static_cast<double>(alpha);
    for (std::size_t i = 0; i < n; ++i) {
        float x = in[i];
        double ax = std::fabs(static_cast<double>(x));
        if (ax > a) {
            out[i] = x;
            continue;
        }
        double eps = rgen.u01(index_offset + i);
        if (ax >= a * eps)
            out[i] = std::copysign(alpha, x);
        else
            out[i] = 0.0f;
    }
}

}  // namespace gradcodec::kernels

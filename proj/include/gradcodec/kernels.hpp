#pragma once

#include <cstddef>
#include <cstdint>

#include "gradcodec/format.hpp"

namespace gradcodec::kernels {

struct QuantizeCounts {
    std::uint64_t overflow = 0;   // clamped to +/- 2^E_max
    std::uint64_t underflow = 0;  // nonzero input flushed to zero
};

// Element-wise emulated-FP quantization of float32 data:
//   y = x * pre;  q = quantize(y, n1, n2);  out = q * post.
// Requires 1 <= n2 <= 7 and 0 <= n1 <= 22 (full float32 exponent range is
// then strictly wider than the emulated one, so subnormal inputs underflow).
// Inputs must be finite.
using quantize_fn = void (*)(const float* in, float* out, std::size_t n, int n1, int n2,
                             float pre, float post, QuantizeCounts& counts);

// Element-wise stochastic pruning with one counter-based uniform draw per
// element (counter = index_offset + i):
//   |x| > alpha        -> x
//   alpha*eps <= |x|   -> sign(x) * alpha
//   otherwise          -> 0
using prune_fn = void (*)(const float* in, float* out, std::size_t n, float alpha,
                          std::uint64_t seed, std::uint64_t index_offset);

// Reference implementations.
void quantize_scalar(const float* in, float* out, std::size_t n, int n1, int n2, float pre,
                     float post, QuantizeCounts& counts);
void prune_scalar(const float* in, float* out, std::size_t n, float alpha, std::uint64_t seed,
                  std::uint64_t index_offset);

#if defined(__x86_64__) || defined(_M_X64)
void quantize_avx2(const float* in, float* out, std::size_t n, int n1, int n2, float pre,
                   float post, QuantizeCounts& counts);
void prune_avx2(const float* in, float* out, std::size_t n, float alpha, std::uint64_t seed,
                std::uint64_t index_offset);
#endif

// Runtime selection: picks AVX2 when the CPU supports it, scalar otherwise.
// GRADCODEC_KERNEL=scalar|avx2 overrides (avx2 falls back when unavailable).
quantize_fn active_quantize();
prune_fn active_prune();
const char* active_backend();
bool avx2_supported();

}  // namespace gradcodec::kernels

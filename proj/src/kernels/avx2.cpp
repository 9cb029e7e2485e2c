#include "gradcodec/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <bit>
#include <cmath>

#include "gradcodec/rng.hpp"

namespace gradcodec::kernels {

namespace {

inline __m256i mul64(__m256i a, __m256i b) {
    __m256i lo = _mm256_mul_epu32(a, b);
    __m256i cross = _mm256_add_epi64(_mm256_mul_epu32(_mm256_srli_epi64(a, 32), b),
                                     _mm256_mul_epu32(a, _mm256_srli_epi64(b, 32)));
    return _mm256_add_epi64(lo, _mm256_slli_epi64(cross, 32));
}

inline __m256i mix64(__m256i x) {
    x = _mm256_xor_si256(x, _mm256_srli_epi64(x, 30));
    x = mul64(x, _mm256_set1_epi64x(0xbf58476d1ce4e5b9ull));
    x = _mm256_xor_si256(x, _mm256_srli_epi64(x, 27));
    x = mul64(x, _mm256_set1_epi64x(0x94d049bb133111ebull));
    x = _mm256_xor_si256(x, _mm256_srli_epi64(x, 31));
    return x;
}

// Exact u64 -> f64 for values < 2^53 (both halves ride the 2^52 / 2^84 bias).
inline __m256d u64_to_f64(__m256i v) {
    __m256i lo = _mm256_blend_epi32(v, _mm256_set1_epi64x(0x4330000000000000ull), 0xaa);
    __m256i hi = _mm256_or_si256(_mm256_srli_epi64(v, 32), _mm256_set1_epi64x(0x4530000000000000ull));
    __m256d lod = _mm256_sub_pd(_mm256_castsi256_pd(lo), _mm256_set1_pd(0x1.0p52));
    __m256d hid = _mm256_sub_pd(_mm256_castsi256_pd(hi), _mm256_set1_pd(0x1.0p84));
    return _mm256_add_pd(hid, lod);
}

}  // namespace

void quantize_avx2(const float* in, float* out, std::size_t n, int n1, int n2, float pre,
                   float post, QuantizeCounts& counts) {
    const int emax = 1 << (n2 - 1);
    const int shift = 23 - n1;
    const __m256i sign_mask = _mm256_set1_epi32(0x80000000u);
    const __m256i abs_mask = _mm256_set1_epi32(0x7fffffff);
    const __m256i mant_mask = _mm256_set1_epi32(0x7fffff);
    const __m256i rem_mask = _mm256_set1_epi32((1 << shift) - 1);
    const __m256i half = _mm256_set1_epi32(1 << (shift - 1));
    const __m256i e8_over = _mm256_set1_epi32(emax + 126);   // e8 > this  -> clamp
    const __m256i e8_under = _mm256_set1_epi32(127 - emax);  // e8 < this -> flush (e8 > 0)
    const __m256i clamp_exp = _mm256_set1_epi32((emax + 127) << 23);
    const __m256 vpre = _mm256_set1_ps(pre);
    const __m256 vpost = _mm256_set1_ps(post);
    const __m256i one = _mm256_set1_epi32(1);

    std::uint64_t over_n = 0, under_n = 0;
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 y = _mm256_mul_ps(_mm256_loadu_ps(in + i), vpre);
        __m256i b = _mm256_castps_si256(y);
        __m256i sign = _mm256_and_si256(b, sign_mask);
        __m256i mag = _mm256_and_si256(b, abs_mask);
        __m256i e8 = _mm256_srli_epi32(mag, 23);
        __m256i mant = _mm256_and_si256(b, mant_mask);

        __m256i is_zero = _mm256_cmpeq_epi32(mag, _mm256_setzero_si256());
        __m256i over = _mm256_cmpgt_epi32(e8, e8_over);
        __m256i under = _mm256_cmpgt_epi32(e8_under, e8);  // includes e8 == 0

        // round mantissa index to nearest, ties to even; the +1 spills into the
        // exponent field on carry, which is exactly the next-binade semantics
        __m256i j = _mm256_srli_epi32(mant, shift);
        __m256i rem = _mm256_and_si256(mant, rem_mask);
        __m256i gt = _mm256_cmpgt_epi32(rem, half);
        __m256i tie = _mm256_and_si256(_mm256_cmpeq_epi32(rem, half),
                                       _mm256_cmpeq_epi32(_mm256_and_si256(j, one), one));
        __m256i inc = _mm256_and_si256(_mm256_or_si256(gt, tie), one);
        __m256i rounded = _mm256_add_epi32(
            _mm256_andnot_si256(mant_mask, mag),
            _mm256_slli_epi32(_mm256_add_epi32(j, inc), shift));

        __m256i bits = _mm256_blendv_epi8(rounded, _mm256_or_si256(clamp_exp, _mm256_setzero_si256()), over);
        bits = _mm256_or_si256(bits, sign);
        __m256i flush = _mm256_or_si256(under, is_zero);
        bits = _mm256_andnot_si256(flush, bits);

        over_n += std::popcount(static_cast<unsigned>(_mm256_movemask_ps(_mm256_castsi256_ps(over))));
        __m256i under_real = _mm256_andnot_si256(is_zero, under);
        under_n += std::popcount(static_cast<unsigned>(_mm256_movemask_ps(_mm256_castsi256_ps(under_real))));

        _mm256_storeu_ps(out + i, _mm256_mul_ps(_mm256_castsi256_ps(bits), vpost));
    }
    counts.overflow += over_n;
    counts.underflow += under_n;
    if (i < n) quantize_scalar(in + i, out + i, n - i, n1, n2, pre, post, counts);
}

void prune_avx2(const float* in, float* out, std::size_t n, float alpha, std::uint64_t seed,
                std::uint64_t index_offset) {
    rng::Counter rgen(seed);
    const __m256i vbase = _mm256_set1_epi64x(static_cast<long long>(rgen.base));
    const __m256i vgold = _mm256_set1_epi64x(static_cast<long long>(rng::kGolden));
    const double a = static_cast<double>(alpha);
    const __m256d va = _mm256_set1_pd(a);
    const __m256d vscale = _mm256_set1_pd(0x1.0p-53);
    const __m256d sgn_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x8000000000000000ull));

    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        std::uint64_t c0 = index_offset + i;
        __m256i ctr = _mm256_add_epi64(_mm256_set1_epi64x(static_cast<long long>(c0)),
                                       _mm256_set_epi64x(3, 2, 1, 0));
        __m256i h = mix64(_mm256_xor_si256(vbase, mul64(ctr, vgold)));
        __m256d eps = _mm256_mul_pd(u64_to_f64(_mm256_srli_epi64(h, 11)), vscale);

        __m256d x = _mm256_cvtps_pd(_mm_loadu_ps(in + i));
        __m256d ax = _mm256_andnot_pd(sgn_mask, x);
        __m256d keep = _mm256_cmp_pd(ax, va, _CMP_GT_OQ);
        __m256d to_alpha = _mm256_cmp_pd(ax, _mm256_mul_pd(va, eps), _CMP_GE_OQ);
        __m256d cand = _mm256_or_pd(va, _mm256_and_pd(x, sgn_mask));
        __m256d res = _mm256_and_pd(to_alpha, cand);
        res = _mm256_blendv_pd(res, x, keep);
        _mm_storeu_ps(out + i, _mm256_cvtpd_ps(res));
    }
    if (i < n) prune_scalar(in + i, out + i, n - i, alpha, seed, index_offset + i);
}

}  // namespace gradcodec::kernels

#endif

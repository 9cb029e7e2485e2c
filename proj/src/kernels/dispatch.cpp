#include <cstdlib>
#include <cstring>

#include "gradcodec/kernels.hpp"

namespace gradcodec::kernels {

bool avx2_supported() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

namespace {

bool use_avx2() {
    static const bool enabled = [] {
        const char* env = std::getenv("GRADCODEC_KERNEL");
        if (env && std::strcmp(env, "scalar") == 0) return false;
        return avx2_supported();
    }();
    return enabled;
}

}  // namespace

quantize_fn active_quantize() {
#if defined(__x86_64__) || defined(_M_X64)
    if (use_avx2()) return &quantize_avx2;
#endif
    return &quantize_scalar;
}

prune_fn active_prune() {
#if defined(__x86_64__) || defined(_M_X64)
    if (use_avx2()) return &prune_avx2;
#endif
    return &prune_scalar;
}

const char* active_backend() { return use_avx2() ? "avx2" : "scalar"; }

}  // namespace gradcodec::kernels

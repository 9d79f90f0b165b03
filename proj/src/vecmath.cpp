#include "slimrag/vecmath.hpp"

#include <cmath>

#include "slimrag/errors.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>
#endif
#if defined(__aarch64__)
#include <arm_neon.h>
#endif

namespace slimrag::vecmath {

namespace detail {

float dot_scalar(const float* a, const float* b, std::size_t n) {
    float acc = 0.0f;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

#if defined(__x86_64__) || defined(_M_X64)
__attribute__((target("avx2,fma")))
float dot_avx2(const float* a, const float* b, std::size_t n) {
    __m256 acc = _mm256_setzero_ps();
    std::size_t i = 0;
    const std::size_t limit = n & ~std::size_t{7};
    for (; i < limit; i += 8) {
        __m256 av = _mm256_loadu_ps(a + i);
        __m256 bv = _mm256_loadu_ps(b + i);
        acc = _mm256_fmadd_ps(av, bv, acc);
    }
    __m128 lo = _mm256_castps256_ps128(acc);
    __m128 hi = _mm256_extractf128_ps(acc, 1);
    __m128 sum4 = _mm_add_ps(lo, hi);
    __m128 sum2 = _mm_add_ps(sum4, _mm_movehl_ps(sum4, sum4));
    __m128 sum1 = _mm_add_ss(sum2, _mm_shuffle_ps(sum2, sum2, 0x1));
    float total = _mm_cvtss_f32(sum1);
    for (; i < n; ++i) total += a[i] * b[i];
    return total;
}
#endif

#if defined(__aarch64__)
float dot_neon(const float* a, const float* b, std::size_t n) {
    float32x4_t acc = vdupq_n_f32(0.0f);
    std::size_t i = 0;
    const std::size_t limit = n & ~std::size_t{3};
    for (; i < limit; i += 4) {
        acc = vfmaq_f32(acc, vld1q_f32(a + i), vld1q_f32(b + i));
    }
    float total = vaddvq_f32(acc);
    for (; i < n; ++i) total += a[i] * b[i];
    return total;
}
#endif

using DotFn = float (*)(const float*, const float*, std::size_t);

struct Dispatch {
    DotFn dot = &dot_scalar;
    const char* name = "scalar";
    Dispatch() {
#if defined(__x86_64__) || defined(_M_X64)
        if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
            dot = &dot_avx2;
            name = "avx2";
        }
#elif defined(__aarch64__)
        dot = &dot_neon;
        name = "neon";
#endif
    }
};

const Dispatch& dispatch() {
    static const Dispatch d;
    return d;
}

}  // namespace detail

float dot(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) throw InvalidInput("dot: size mismatch");
    return detail::dispatch().dot(a.data(), b.data(), a.size());
}

float l2_norm(std::span<const float> v) {
    return std::sqrt(detail::dispatch().dot(v.data(), v.data(), v.size()));
}

float normalize(std::span<float> v) {
    float norm = l2_norm(v);
    if (norm == 0.0f) return 0.0f;
    for (float& x : v) x /= norm;
    return norm;
}

const char* active_kernel() { return detail::dispatch().name; }

}  // namespace slimrag::vecmath

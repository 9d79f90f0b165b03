#pragma once

#include <cstddef>
#include <span>

// Dense float kernels behind the embedding reranker. Each operation has a
// scalar reference implementation and a SIMD variant; the fastest one the
// CPU supports is selected once at startup. The scalar kernels stay exposed
// so equivalence tests can compare against them directly.
namespace slimrag::vecmath {

float dot(std::span<const float> a, std::span<const float> b);

float l2_norm(std::span<const float> v);

// Scales v to unit length in place and returns the pre-scaling norm.
// A zero vector is left unchanged (returns 0).
float normalize(std::span<float> v);

// Name of the selected kernel set: "avx2", "neon", or "scalar".
const char* active_kernel();

namespace detail {
float dot_scalar(const float* a, const float* b, std::size_t n);
#if defined(__x86_64__) || defined(_M_X64)
float dot_avx2(const float* a, const float* b, std::size_t n);
#endif
#if defined(__aarch64__)
float dot_neon(const float* a, const float* b, std::size_t n);
#endif
}  // namespace detail

}  // namespace slimrag::vecmath

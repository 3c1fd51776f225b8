#pragma once

#include <cstring>

#include "argbd/common.hpp"

namespace argbd {
namespace detail {

// Small fixed-order microkernels for the convolution inner loops. Lane
// widths and accumulation order are compile-time constants, so results are
// identical from run to run and across thread counts.

#if defined(__GNUC__) && (defined(__AVX2__) || defined(__ARM_NEON))
#define ARGBD_VECTOR_KERNELS 1
#else
#define ARGBD_VECTOR_KERNELS 0
#endif

#if ARGBD_VECTOR_KERNELS
typedef float vf8 __attribute__((vector_size(32)));

// memcpy compiles to an unaligned vector load
inline vf8 load8(const float* p) {
    vf8 v;
    std::memcpy(&v, p, sizeof(v));
    return v;
}
#endif

// sum_i a[i] * b[i]
inline float dot(const float* a, const float* b, index_t n) {
#if ARGBD_VECTOR_KERNELS
    vf8 acc0 = {0, 0, 0, 0, 0, 0, 0, 0};
    vf8 acc1 = acc0, acc2 = acc0, acc3 = acc0;
    index_t i = 0;
    for (; i + 32 <= n; i += 32) {
        acc0 += load8(a + i) * load8(b + i);
        acc1 += load8(a + i + 8) * load8(b + i + 8);
        acc2 += load8(a + i + 16) * load8(b + i + 16);
        acc3 += load8(a + i + 24) * load8(b + i + 24);
    }
    for (; i + 8 <= n; i += 8) acc0 += load8(a + i) * load8(b + i);
    acc0 += acc1 + (acc2 + acc3);
    float sum = ((acc0[0] + acc0[1]) + (acc0[2] + acc0[3])) +
                ((acc0[4] + acc0[5]) + (acc0[6] + acc0[7]));
    for (; i < n; ++i) sum += a[i] * b[i];
    return sum;
#else
    float s0 = 0, s1 = 0, s2 = 0, s3 = 0;
    index_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    float sum = (s0 + s1) + (s2 + s3);
    for (; i < n; ++i) sum += a[i] * b[i];
    return sum;
#endif
}

inline double dot(const double* a, const double* b, index_t n) {
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
    index_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    double sum = (s0 + s1) + (s2 + s3);
    for (; i < n; ++i) sum += a[i] * b[i];
    return sum;
}

// dst[i] += s * a[i]; element-independent, the compiler vectorizes this as is
template <typename T>
inline void axpy(T* dst, const T* a, T s, index_t n) {
    for (index_t i = 0; i < n; ++i) dst[i] += s * a[i];
}

} // namespace detail
} // namespace argbd

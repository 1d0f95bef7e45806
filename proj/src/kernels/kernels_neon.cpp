//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include "./backends.hpp"

#if defined(UNIMOMO_HAVE_NEON)

#include <arm_neon.h>

#include <cstddef>

namespace unimomo::kernels {
namespace {

// 2-lane double kernels for AArch64. Same tail/tolerance caveats as AVX2.

void axpy(std::size_t n, double a, const double* x, double* y) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i)
    y[i] += a * x[i];
}

void scale(std::size_t n, double a, double* x) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(x + i, vmulq_f64(va, vld1q_f64(x + i)));
  for (; i < n; ++i)
    x[i] *= a;
}

void add(std::size_t n, const double* a, const double* b, double* out) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(out + i, vaddq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i)
    out[i] = a[i] + b[i];
}

void sub(std::size_t n, const double* a, const double* b, double* out) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(out + i, vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i)
    out[i] = a[i] - b[i];
}

void mul(std::size_t n, const double* a, const double* b, double* out) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i)
    out[i] = a[i] * b[i];
}

void mulacc(std::size_t n, const double* a, const double* b, double* out) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(out + i,
              vfmaq_f64(vld1q_f64(out + i), vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i)
    out[i] += a[i] * b[i];
}

double dot(std::size_t n, const double* a, const double* b) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    acc = vfmaq_f64(acc, vld1q_f64(a + i), vld1q_f64(b + i));
  double total = vaddvq_f64(acc);
  for (; i < n; ++i)
    total += a[i] * b[i];
  return total;
}

double sum(std::size_t n, const double* x) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    acc = vaddq_f64(acc, vld1q_f64(x + i));
  double total = vaddvq_f64(acc);
  for (; i < n; ++i)
    total += x[i];
  return total;
}

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* A,
             const double* B, double* C) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p)
      axpy(n, A[i * k + p], B + p * n, C + i * n);
  }
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* A,
             const double* B, double* C) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j)
      C[i * n + j] += dot(k, A + i * k, B + j * k);
  }
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* A,
             const double* B, double* C) {
  for (std::size_t p = 0; p < k; ++p) {
    for (std::size_t i = 0; i < m; ++i)
      axpy(n, A[p * m + i], B + p * n, C + i * n);
  }
}

}  // namespace

const Backend* neon_backend() {
  static const Backend backend = {
    "neon",  axpy, scale, add, sub, mul, mulacc, dot, sum,
    gemm_nn, gemm_nt, gemm_tn,
  };
  return &backend;
}

}  // namespace unimomo::kernels

#else  // !UNIMOMO_HAVE_NEON

namespace unimomo::kernels {
const Backend* neon_backend() { return nullptr; }
}  // namespace unimomo::kernels

#endif

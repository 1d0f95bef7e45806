//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include "./backends.hpp"

#if defined(UNIMOMO_HAVE_AVX2)

#include <immintrin.h>

#include <cstddef>

namespace unimomo::kernels {
namespace {

// 4-lane double kernels with FMA. Tails are handled with plain loops; the
// accumulation order therefore differs from the scalar backend, which is why
// reductions are compared with a tolerance instead of bit equality.

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swap = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swap));
}

void axpy(std::size_t n, double a, const double* x, double* y) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i)
    y[i] += a * x[i];
}

void scale(std::size_t n, double a, double* x) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i)
    x[i] *= a;
}

void add(std::size_t n, const double* a, const double* b, double* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(
        out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i)
    out[i] = a[i] + b[i];
}

void sub(std::size_t n, const double* a, const double* b, double* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(
        out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i)
    out[i] = a[i] - b[i];
}

void mul(std::size_t n, const double* a, const double* b, double* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(
        out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i)
    out[i] = a[i] * b[i];
}

void mulacc(std::size_t n, const double* a, const double* b, double* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vo = _mm256_loadu_pd(out + i);
    vo = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), vo);
    _mm256_storeu_pd(out + i, vo);
  }
  for (; i < n; ++i)
    out[i] += a[i] * b[i];
}

double dot(std::size_t n, const double* a, const double* b) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  double total = hsum(acc);
  for (; i < n; ++i)
    total += a[i] * b[i];
  return total;
}

double sum(std::size_t n, const double* x) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double total = hsum(acc);
  for (; i < n; ++i)
    total += x[i];
  return total;
}

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* A,
             const double* B, double* C) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      // C[i,:] += A[i,p] * B[p,:]
      axpy(n, A[i * k + p], B + p * n, C + i * n);
    }
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

const Backend* avx2_backend() {
  static const Backend backend = {
    "avx2",  axpy, scale, add, sub, mul, mulacc, dot, sum,
    gemm_nn, gemm_nt, gemm_tn,
  };
  return &backend;
}

}  // namespace unimomo::kernels

#else  // !UNIMOMO_HAVE_AVX2

namespace unimomo::kernels {
const Backend* avx2_backend() { return nullptr; }
}  // namespace unimomo::kernels

#endif

//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include <cstddef>

#include "unimomo/kernels.hpp"

namespace unimomo::kernels {
namespace {

void axpy(std::size_t n, double a, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i)
    y[i] += a * x[i];
}

void scale(std::size_t n, double a, double* x) {
  for (std::size_t i = 0; i < n; ++i)
    x[i] *= a;
}

void add(std::size_t n, const double* a, const double* b, double* out) {
  for (std::size_t i = 0; i < n; ++i)
    out[i] = a[i] + b[i];
}

void sub(std::size_t n, const double* a, const double* b, double* out) {
  for (std::size_t i = 0; i < n; ++i)
    out[i] = a[i] - b[i];
}

void mul(std::size_t n, const double* a, const double* b, double* out) {
  for (std::size_t i = 0; i < n; ++i)
    out[i] = a[i] * b[i];
}

void mulacc(std::size_t n, const double* a, const double* b, double* out) {
  for (std::size_t i = 0; i < n; ++i)
    out[i] += a[i] * b[i];
}

double dot(std::size_t n, const double* a, const double* b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    acc += a[i] * b[i];
  return acc;
}

double sum(std::size_t n, const double* x) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    acc += x[i];
  return acc;
}

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* A,
             const double* B, double* C) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double a = A[i * k + p];
      const double* brow = B + p * n;
      double* crow = C + i * n;
      for (std::size_t j = 0; j < n; ++j)
        crow[j] += a * brow[j];
    }
  }
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* A,
             const double* B, double* C) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = A + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = B + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p)
        acc += arow[p] * brow[p];
      C[i * n + j] += acc;
    }
  }
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* A,
             const double* B, double* C) {
  for (std::size_t p = 0; p < k; ++p) {
    const double* arow = A + p * m;
    const double* brow = B + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double a = arow[i];
      double* crow = C + i * n;
      for (std::size_t j = 0; j < n; ++j)
        crow[j] += a * brow[j];
    }
  }
}

}  // namespace

const Backend& scalar_backend() {
  static const Backend backend = {
    "scalar", axpy, scale, add, sub, mul, mulacc, dot, sum,
    gemm_nn,  gemm_nt, gemm_tn,
  };
  return backend;
}

}  // namespace unimomo::kernels

//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef UNIMOMO_KERNELS_HPP_
#define UNIMOMO_KERNELS_HPP_

#include <cstddef>
#include <string>
#include <vector>

namespace unimomo::kernels {

// Dense double-precision primitives behind the tensor ops. One backend is
// selected at startup from the CPU feature set; all backends must agree with
// the scalar reference within floating-point reassociation error (see
// tests/test_kernels.cpp).
//
// Matrix arguments are row-major and gemm_* accumulate into C.
struct Backend {
  const char* name;

  // y[i] += a * x[i]
  void (*axpy)(std::size_t n, double a, const double* x, double* y);
  // x[i] *= a
  void (*scale)(std::size_t n, double a, double* x);
  // out[i] = a[i] + b[i]
  void (*add)(std::size_t n, const double* a, const double* b, double* out);
  // out[i] = a[i] - b[i]
  void (*sub)(std::size_t n, const double* a, const double* b, double* out);
  // out[i] = a[i] * b[i]
  void (*mul)(std::size_t n, const double* a, const double* b, double* out);
  // out[i] += a[i] * b[i]
  void (*mulacc)(std::size_t n, const double* a, const double* b, double* out);
  double (*dot)(std::size_t n, const double* a, const double* b);
  double (*sum)(std::size_t n, const double* x);

  // C(m,n) += A(m,k) B(k,n)
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double* A,
                  const double* B, double* C);
  // C(m,n) += A(m,k) B(n,k)^T
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const double* A,
                  const double* B, double* C);
  // C(m,n) += A(k,m)^T B(k,n)
  void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k, const double* A,
                  const double* B, double* C);
};

// Backend picked at startup (honors the UNIMOMO_KERNELS env var).
const Backend& active();

// Portable reference implementation; the ground truth for equivalence tests.
const Backend& scalar_backend();

// Names of all backends usable on this machine ("scalar" always present).
std::vector<std::string> available_backends();

// Force a specific backend ("scalar", "avx2", "neon"). Throws
// std::invalid_argument if the backend is unknown or unsupported here.
void force_backend(const std::string& name);

}  // namespace unimomo::kernels

#endif  // UNIMOMO_KERNELS_HPP_

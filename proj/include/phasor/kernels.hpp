// Copyright 2026 the phasor authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

namespace phasor::kernels {

/// Table of the data-parallel inner loops everything else is built on.
/// Two implementations exist: a scalar reference and an AVX2/FMA variant.
/// The active table is picked once at startup; PHASOR_KERNELS=scalar|avx2
/// overrides the choice (avx2 falls back to scalar when unsupported).
///
/// All gemm variants accumulate into C (row-major, contiguous):
///   gemm_nn: C[M,N] += A[M,K] * B[K,N]
///   gemm_nt: C[M,N] += A[M,K] * B[N,K]^T
///   gemm_tn: C[M,N] += A[K,M]^T * B[K,N]
struct Backend {
  const char* name;

  void (*add)(double* dst, const double* a, const double* b, size_t n);
  void (*sub)(double* dst, const double* a, const double* b, size_t n);
  void (*mul)(double* dst, const double* a, const double* b, size_t n);
  void (*macc)(double* dst, const double* a, const double* b, size_t n);  // dst += a*b
  void (*axpy)(double* dst, double alpha, const double* x, size_t n);     // dst += alpha*x
  void (*scale)(double* dst, const double* a, double alpha, size_t n);    // dst = alpha*a

  double (*dot)(const double* a, const double* b, size_t n);
  double (*sum)(const double* a, size_t n);
  double (*sumsq)(const double* a, size_t n);

  void (*gemm_nn)(double* c, const double* a, const double* b, size_t m, size_t k, size_t n);
  void (*gemm_nt)(double* c, const double* a, const double* b, size_t m, size_t k, size_t n);
  void (*gemm_tn)(double* c, const double* a, const double* b, size_t m, size_t k, size_t n);
};

const Backend& scalar_backend();

/// AVX2+FMA table, or nullptr when the CPU (or build) lacks support.
const Backend* avx2_backend();

/// The dispatched table. Resolved once; stable for the process lifetime.
const Backend& active();

}  // namespace phasor::kernels

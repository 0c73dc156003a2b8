// Copyright 2026 the phasor authors
// SPDX-License-Identifier: Apache-2.0

#include "phasor/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace phasor::kernels {

namespace {

void s_add(double* dst, const double* a, const double* b, size_t n) {
  for (size_t i = 0; i < n; ++i) dst[i] = a[i] + b[i];
}

void s_sub(double* dst, const double* a, const double* b, size_t n) {
  for (size_t i = 0; i < n; ++i) dst[i] = a[i] - b[i];
}

void s_mul(double* dst, const double* a, const double* b, size_t n) {
  for (size_t i = 0; i < n; ++i) dst[i] = a[i] * b[i];
}

void s_macc(double* dst, const double* a, const double* b, size_t n) {
  for (size_t i = 0; i < n; ++i) dst[i] += a[i] * b[i];
}

void s_axpy(double* dst, double alpha, const double* x, size_t n) {
  for (size_t i = 0; i < n; ++i) dst[i] += alpha * x[i];
}

void s_scale(double* dst, const double* a, double alpha, size_t n) {
  for (size_t i = 0; i < n; ++i) dst[i] = alpha * a[i];
}

double s_dot(const double* a, const double* b, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double s_sum(const double* a, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) acc += a[i];
  return acc;
}

double s_sumsq(const double* a, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) acc += a[i] * a[i];
  return acc;
}

void s_gemm_nn(double* c, const double* a, const double* b, size_t m, size_t k, size_t n) {
  for (size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    const double* arow = a + i * k;
    for (size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* brow = b + p * n;
      for (size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void s_gemm_nt(double* c, const double* a, const double* b, size_t m, size_t k, size_t n) {
  for (size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (size_t j = 0; j < n; ++j) crow[j] += s_dot(arow, b + j * k, k);
  }
}

void s_gemm_tn(double* c, const double* a, const double* b, size_t m, size_t k, size_t n) {
  for (size_t p = 0; p < k; ++p) {
    const double* arow = a + p * m;
    const double* brow = b + p * n;
    for (size_t i = 0; i < m; ++i) {
      const double av = arow[i];
      double* crow = c + i * n;
      for (size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

constexpr Backend kScalar = {
    "scalar", s_add, s_sub, s_mul, s_macc, s_axpy, s_scale,
    s_dot,    s_sum, s_sumsq, s_gemm_nn, s_gemm_nt, s_gemm_tn,
};

const Backend* resolve() {
  const char* env = std::getenv("PHASOR_KERNELS");
  if (env != nullptr && std::strcmp(env, "scalar") == 0) return &kScalar;
  const Backend* avx2 = avx2_backend();
  if (env != nullptr && std::strcmp(env, "avx2") == 0 && avx2 == nullptr) return &kScalar;
  return avx2 != nullptr ? avx2 : &kScalar;
}

}  // namespace

const Backend& scalar_backend() { return kScalar; }

const Backend& active() {
  static const Backend* chosen = resolve();
  return *chosen;
}

}  // namespace phasor::kernels

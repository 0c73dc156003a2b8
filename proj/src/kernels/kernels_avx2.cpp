// Copyright 2026 the phasor authors
// SPDX-License-Identifier: Apache-2.0

#include "phasor/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#endif

namespace phasor::kernels {

#if defined(__AVX2__) && defined(__FMA__)

namespace {

inline double reduce_add_pd(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swap = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swap));
}

void v_add(double* dst, const double* a, const double* b, size_t n) {
  size_t i = 0;
  for (; i + 3 < n; i += 4)
    _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) dst[i] = a[i] + b[i];
}

void v_sub(double* dst, const double* a, const double* b, size_t n) {
  size_t i = 0;
  for (; i + 3 < n; i += 4)
    _mm256_storeu_pd(dst + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) dst[i] = a[i] - b[i];
}

void v_mul(double* dst, const double* a, const double* b, size_t n) {
  size_t i = 0;
  for (; i + 3 < n; i += 4)
    _mm256_storeu_pd(dst + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) dst[i] = a[i] * b[i];
}

void v_macc(double* dst, const double* a, const double* b, size_t n) {
  size_t i = 0;
  for (; i + 3 < n; i += 4) {
    __m256d d = _mm256_loadu_pd(dst + i);
    d = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), d);
    _mm256_storeu_pd(dst + i, d);
  }
  for (; i < n; ++i) dst[i] += a[i] * b[i];
}

void v_axpy(double* dst, double alpha, const double* x, size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  size_t i = 0;
  for (; i + 3 < n; i += 4) {
    __m256d d = _mm256_loadu_pd(dst + i);
    d = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), d);
    _mm256_storeu_pd(dst + i, d);
  }
  for (; i < n; ++i) dst[i] += alpha * x[i];
}

void v_scale(double* dst, const double* a, double alpha, size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  size_t i = 0;
  for (; i + 3 < n; i += 4)
    _mm256_storeu_pd(dst + i, _mm256_mul_pd(va, _mm256_loadu_pd(a + i)));
  for (; i < n; ++i) dst[i] = alpha * a[i];
}

double v_dot(const double* a, const double* b, size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 7 < n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 3 < n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double tail = 0.0;
  for (; i < n; ++i) tail += a[i] * b[i];
  return reduce_add_pd(_mm256_add_pd(acc0, acc1)) + tail;
}

double v_sum(const double* a, size_t n) {
  __m256d acc = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 3 < n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
  double tail = 0.0;
  for (; i < n; ++i) tail += a[i];
  return reduce_add_pd(acc) + tail;
}

double v_sumsq(const double* a, size_t n) {
  __m256d acc = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 3 < n; i += 4) {
    __m256d x = _mm256_loadu_pd(a + i);
    acc = _mm256_fmadd_pd(x, x, acc);
  }
  double tail = 0.0;
  for (; i < n; ++i) tail += a[i] * a[i];
  return reduce_add_pd(acc) + tail;
}

void v_gemm_nn(double* c, const double* a, const double* b, size_t m, size_t k, size_t n) {
  for (size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    const double* arow = a + i * k;
    size_t p = 0;
    // two B rows per pass to cut the load/store traffic on C
    for (; p + 1 < k; p += 2) {
      const __m256d a0 = _mm256_set1_pd(arow[p]);
      const __m256d a1 = _mm256_set1_pd(arow[p + 1]);
      const double* b0 = b + p * n;
      const double* b1 = b0 + n;
      size_t j = 0;
      for (; j + 3 < n; j += 4) {
        __m256d cc = _mm256_loadu_pd(crow + j);
        cc = _mm256_fmadd_pd(a0, _mm256_loadu_pd(b0 + j), cc);
        cc = _mm256_fmadd_pd(a1, _mm256_loadu_pd(b1 + j), cc);
        _mm256_storeu_pd(crow + j, cc);
      }
      for (; j < n; ++j) crow[j] += arow[p] * b0[j] + arow[p + 1] * b1[j];
    }
    for (; p < k; ++p) v_axpy(crow, arow[p], b + p * n, n);
  }
}

void v_gemm_nt(double* c, const double* a, const double* b, size_t m, size_t k, size_t n) {
  for (size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (size_t j = 0; j < n; ++j) crow[j] += v_dot(arow, b + j * k, k);
  }
}

void v_gemm_tn(double* c, const double* a, const double* b, size_t m, size_t k, size_t n) {
  for (size_t p = 0; p < k; ++p) {
    const double* arow = a + p * m;
    const double* brow = b + p * n;
    for (size_t i = 0; i < m; ++i) v_axpy(c + i * n, arow[i], brow, n);
  }
}

constexpr Backend kAvx2 = {
    "avx2",  v_add, v_sub, v_mul, v_macc, v_axpy, v_scale,
    v_dot,   v_sum, v_sumsq, v_gemm_nn, v_gemm_nt, v_gemm_tn,
};

}  // namespace

const Backend* avx2_backend() {
  static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return ok ? &kAvx2 : nullptr;
}

#else

const Backend* avx2_backend() { return nullptr; }

#endif

}  // namespace phasor::kernels

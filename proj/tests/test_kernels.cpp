// Copyright 2026 the phasor authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "phasor/common.hpp"
#include "phasor/kernels.hpp"

using phasor::Rng;
using namespace phasor::kernels;

namespace {

std::vector<double> randvec(Rng& rng, size_t n, double lo = -2.0, double hi = 2.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Sizes straddle the 4-wide vector width so remainder tails get exercised.
const size_t kSizes[] = {1, 2, 3, 4, 5, 7, 8, 15, 16, 17, 64, 100, 1023};

}  // namespace

TEST_CASE("scalar elementwise kernels match plain loops") {
  Rng rng(11);
  const Backend& s = scalar_backend();
  for (size_t n : kSizes) {
    auto a = randvec(rng, n), b = randvec(rng, n);
    std::vector<double> dst(n), ref(n);

    s.add(dst.data(), a.data(), b.data(), n);
    for (size_t i = 0; i < n; ++i) ref[i] = a[i] + b[i];
    CHECK(max_abs_diff(dst, ref) == 0.0);

    s.mul(dst.data(), a.data(), b.data(), n);
    for (size_t i = 0; i < n; ++i) ref[i] = a[i] * b[i];
    CHECK(max_abs_diff(dst, ref) == 0.0);

    dst = b;
    ref = b;
    s.axpy(dst.data(), 0.5, a.data(), n);
    for (size_t i = 0; i < n; ++i) ref[i] += 0.5 * a[i];
    CHECK(max_abs_diff(dst, ref) == 0.0);
  }
}

TEST_CASE("scalar gemm_nn matches triple loop") {
  Rng rng(12);
  const Backend& s = scalar_backend();
  for (auto [m, k, n] : {std::tuple<size_t, size_t, size_t>{1, 1, 1},
                         {2, 3, 4},
                         {5, 7, 3},
                         {8, 8, 8},
                         {13, 6, 9}}) {
    auto a = randvec(rng, m * k), b = randvec(rng, k * n);
    std::vector<double> c(m * n, 0.25), ref(m * n, 0.25);
    s.gemm_nn(c.data(), a.data(), b.data(), m, k, n);
    for (size_t i = 0; i < m; ++i)
      for (size_t j = 0; j < n; ++j)
        for (size_t p = 0; p < k; ++p) ref[i * n + j] += a[i * k + p] * b[p * n + j];
    CHECK(max_abs_diff(c, ref) < 1e-13);
  }
}

TEST_CASE("gemm_nt and gemm_tn agree with gemm_nn on transposed operands") {
  Rng rng(13);
  const Backend& s = scalar_backend();
  const size_t m = 7, k = 5, n = 6;
  auto a = randvec(rng, m * k), b = randvec(rng, k * n);

  std::vector<double> c_ref(m * n, 0.0);
  s.gemm_nn(c_ref.data(), a.data(), b.data(), m, k, n);

  // B^T stored [n,k]; A^T stored [k,m].
  std::vector<double> bt(n * k), at(k * m);
  for (size_t p = 0; p < k; ++p)
    for (size_t j = 0; j < n; ++j) bt[j * k + p] = b[p * n + j];
  for (size_t i = 0; i < m; ++i)
    for (size_t p = 0; p < k; ++p) at[p * m + i] = a[i * k + p];

  std::vector<double> c1(m * n, 0.0), c2(m * n, 0.0);
  s.gemm_nt(c1.data(), a.data(), bt.data(), m, k, n);
  s.gemm_tn(c2.data(), at.data(), b.data(), m, k, n);
  CHECK(max_abs_diff(c1, c_ref) < 1e-13);
  CHECK(max_abs_diff(c2, c_ref) < 1e-13);
}

TEST_CASE("avx2 backend matches scalar backend") {
  const Backend* v = avx2_backend();
  if (!v) {
    MESSAGE("avx2 unavailable on this host; skipping");
    return;
  }
  const Backend& s = scalar_backend();
  Rng rng(14);

  for (size_t n : kSizes) {
    auto a = randvec(rng, n), b = randvec(rng, n);
    std::vector<double> ds(n), dv(n);

    s.add(ds.data(), a.data(), b.data(), n);
    v->add(dv.data(), a.data(), b.data(), n);
    CHECK(max_abs_diff(ds, dv) == 0.0);

    s.sub(ds.data(), a.data(), b.data(), n);
    v->sub(dv.data(), a.data(), b.data(), n);
    CHECK(max_abs_diff(ds, dv) == 0.0);

    s.mul(ds.data(), a.data(), b.data(), n);
    v->mul(dv.data(), a.data(), b.data(), n);
    CHECK(max_abs_diff(ds, dv) == 0.0);

    ds = b;
    dv = b;
    s.macc(ds.data(), a.data(), b.data(), n);
    v->macc(dv.data(), a.data(), b.data(), n);
    // FMA contracts the multiply-add, so allow rounding-level slack.
    CHECK(max_abs_diff(ds, dv) < 1e-14);

    ds = b;
    dv = b;
    s.axpy(ds.data(), -1.7, a.data(), n);
    v->axpy(dv.data(), -1.7, a.data(), n);
    CHECK(max_abs_diff(ds, dv) < 1e-14);

    s.scale(ds.data(), a.data(), 3.1, n);
    v->scale(dv.data(), a.data(), 3.1, n);
    CHECK(max_abs_diff(ds, dv) == 0.0);

    CHECK(std::abs(s.dot(a.data(), b.data(), n) - v->dot(a.data(), b.data(), n)) <
          1e-12 * std::max(1.0, static_cast<double>(n)));
    CHECK(std::abs(s.sum(a.data(), n) - v->sum(a.data(), n)) <
          1e-12 * std::max(1.0, static_cast<double>(n)));
    CHECK(std::abs(s.sumsq(a.data(), n) - v->sumsq(a.data(), n)) <
          1e-12 * std::max(1.0, static_cast<double>(n)));
  }
}

TEST_CASE("avx2 gemm variants match scalar") {
  const Backend* v = avx2_backend();
  if (!v) {
    MESSAGE("avx2 unavailable on this host; skipping");
    return;
  }
  const Backend& s = scalar_backend();
  Rng rng(15);

  for (auto [m, k, n] : {std::tuple<size_t, size_t, size_t>{1, 1, 1},
                         {3, 5, 2},
                         {4, 4, 4},
                         {7, 9, 11},
                         {16, 3, 33},
                         {25, 25, 25}}) {
    auto a = randvec(rng, m * k), b = randvec(rng, k * n);
    auto bt = randvec(rng, n * k), at = randvec(rng, k * m);
    std::vector<double> cs(m * n, 0.5), cv(m * n, 0.5);

    s.gemm_nn(cs.data(), a.data(), b.data(), m, k, n);
    v->gemm_nn(cv.data(), a.data(), b.data(), m, k, n);
    CHECK(max_abs_diff(cs, cv) < 1e-12);

    std::fill(cs.begin(), cs.end(), 0.0);
    std::fill(cv.begin(), cv.end(), 0.0);
    s.gemm_nt(cs.data(), a.data(), bt.data(), m, k, n);
    v->gemm_nt(cv.data(), a.data(), bt.data(), m, k, n);
    CHECK(max_abs_diff(cs, cv) < 1e-12);

    std::fill(cs.begin(), cs.end(), 0.0);
    std::fill(cv.begin(), cv.end(), 0.0);
    s.gemm_tn(cs.data(), at.data(), b.data(), m, k, n);
    v->gemm_tn(cv.data(), at.data(), b.data(), m, k, n);
    CHECK(max_abs_diff(cs, cv) < 1e-12);
  }
}

TEST_CASE("active backend honours PHASOR_KERNELS and stays stable") {
  const Backend& first = active();
  const Backend& second = active();
  CHECK(&first == &second);
  CHECK((std::string(first.name) == "scalar" || std::string(first.name) == "avx2"));
}

TEST_CASE("rng is deterministic and uniform stays in range") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    double x = a.uniform();
    CHECK(x == b.uniform());
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
  Rng c(7);
  double mean = 0.0;
  for (int i = 0; i < 20000; ++i) mean += c.normal();
  mean /= 20000.0;
  CHECK(std::abs(mean) < 0.05);
}

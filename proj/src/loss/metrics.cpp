// Copyright 2026 the phasor authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "phasor/losses.hpp"

namespace phasor::loss {

namespace {

void check_grids(const TensorPtr& a, const TensorPtr& b, const TensorPtr& c,
                 const char* who) {
  if (a->shape.rank != 2 || a->shape != b->shape || a->shape != c->shape)
    throw ShapeError(std::string(who) + " wants three matching [frames, bins] grids");
}

// Normalized magnitude weights; throws when there is no weight mass.
std::vector<double> norm_weights(const TensorPtr& mag, const char* who) {
  KahanSum total;
  for (double v : mag->data) total.add(v);
  if (total.value() <= 0.0)
    throw ValueError(std::string(who) + ": weight magnitudes sum to zero");
  std::vector<double> w(mag->data);
  for (auto& v : w) v /= total.value();
  return w;
}

}  // namespace

double pd_metric(const TensorPtr& pred_phase, const TensorPtr& ref_phase,
                 const TensorPtr& clean_mag) {
  check_grids(pred_phase, ref_phase, clean_mag, "pd_metric");
  auto w = norm_weights(clean_mag, "pd_metric");
  KahanSum acc;
  for (size_t i = 0; i < w.size(); ++i)
    acc.add(w[i] * anti_wrap_scalar(ref_phase->data[i] - pred_phase->data[i]));
  return 180.0 / kPi * acc.value();
}

double wopd_metric(const TensorPtr& pred_phase, const TensorPtr& ref_phase,
                   const TensorPtr& clean_mag) {
  check_grids(pred_phase, ref_phase, clean_mag, "wopd_metric");
  auto w = norm_weights(clean_mag, "wopd_metric");
  const int64_t t = pred_phase->shape[0], f = pred_phase->shape[1];
  auto at = [&](const TensorPtr& g, int64_t i, int64_t j) { return g->cat(i, j); };

  KahanSum ip, gd, iaf;
  for (int64_t i = 0; i < t; ++i)
    for (int64_t j = 0; j < f; ++j) {
      double wij = w[static_cast<size_t>(i * f + j)];
      ip.add(wij * anti_wrap_scalar(at(pred_phase, i, j) - at(ref_phase, i, j)));
      if (j + 1 < f) {
        double dp = at(pred_phase, i, j + 1) - at(pred_phase, i, j);
        double dr = at(ref_phase, i, j + 1) - at(ref_phase, i, j);
        gd.add(wij * anti_wrap_scalar(dp - dr));
      }
      if (i + 1 < t) {
        double dp = at(pred_phase, i + 1, j) - at(pred_phase, i, j);
        double dr = at(ref_phase, i + 1, j) - at(ref_phase, i, j);
        iaf.add(wij * anti_wrap_scalar(dp - dr));
      }
    }
  return (ip.value() + gd.value() + iaf.value()) / (3.0 * kPi);
}

double si_sdr(const std::vector<double>& est, const std::vector<double>& ref) {
  if (est.size() != ref.size()) throw ShapeError("si_sdr length mismatch");
  KahanSum dot, ref_e;
  for (size_t i = 0; i < ref.size(); ++i) {
    dot.add(est[i] * ref[i]);
    ref_e.add(ref[i] * ref[i]);
  }
  if (ref_e.value() <= 0.0) throw ValueError("si_sdr: silent reference");
  const double g = dot.value() / ref_e.value();
  KahanSum target_e, err_e;
  for (size_t i = 0; i < ref.size(); ++i) {
    double t = g * ref[i];
    double e = est[i] - t;
    target_e.add(t * t);
    err_e.add(e * e);
  }
  const double cap = 120.0;
  if (err_e.value() <= 0.0 || target_e.value() >= err_e.value() * 1e12) return cap;
  double db = 10.0 * std::log10(target_e.value() / err_e.value());
  return std::min(db, cap);
}

}  // namespace phasor::loss

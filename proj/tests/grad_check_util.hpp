// Copyright 2026 the phasor authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "phasor/ops.hpp"

namespace phasor::testutil {

/// Mixed absolute/relative error, safe near zero.
inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

/// Runs one taped backward of the scalar loss_fn, then perturbs every element
/// of every input and compares against central differences. loss_fn must
/// rebuild its graph from the current input values on each call; outside the
/// tape scope those calls run eagerly. Returns the worst rel_err seen.
inline double max_grad_err(const std::function<TensorPtr()>& loss_fn,
                           const std::vector<TensorPtr>& inputs, double h = 1e-5) {
  for (const auto& p : inputs) {
    p->requires_grad = true;
    p->grad.clear();
  }
  {
    TapeScope scope;
    TensorPtr loss = loss_fn();
    scope.tape().backward(loss);
  }
  double worst = 0.0;
  for (const auto& p : inputs) {
    p->ensure_grad();
    for (size_t i = 0; i < p->data.size(); ++i) {
      const double keep = p->data[i];
      p->data[i] = keep + h;
      const double lp = loss_fn()->data[0];
      p->data[i] = keep - h;
      const double lm = loss_fn()->data[0];
      p->data[i] = keep;
      const double fd = (lp - lm) / (2.0 * h);
      worst = std::max(worst, rel_err(p->grad[i], fd));
    }
  }
  return worst;
}

inline TensorPtr randn(Rng& rng, const Shape& s, double scale = 1.0) {
  auto t = zeros(s);
  for (auto& v : t->data) v = scale * rng.normal();
  return t;
}

inline TensorPtr randu(Rng& rng, const Shape& s, double lo, double hi) {
  auto t = zeros(s);
  for (auto& v : t->data) v = rng.uniform(lo, hi);
  return t;
}

}  // namespace phasor::testutil

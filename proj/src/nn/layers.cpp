// Copyright 2026 the phasor authors
// SPDX-License-Identifier: Apache-2.0

#include "phasor/nn.hpp"

namespace phasor::nn {

namespace o = phasor::ops;

namespace {

// 1 / sqrt(mean over dims + eps), shape-preserving via keepdims.
TensorPtr inv_rms(const TensorPtr& sq, const std::vector<int>& dims, double eps) {
  auto m = o::reduce_mean(sq, dims, true);
  return o::pow_const(o::add_const(m, eps), -0.5);
}

}  // namespace

CTensor crms_norm(const CTensor& x, const TensorPtr& gamma, double eps) {
  auto sq = o::add(o::mul(x.re, x.re), o::mul(x.im, x.im));
  auto inv = inv_rms(sq, {2, 3}, eps);
  return {o::mul(o::mul(x.re, inv), gamma), o::mul(o::mul(x.im, inv), gamma)};
}

TensorPtr rms_norm_silu(const TensorPtr& x, const TensorPtr& gamma, const TensorPtr& beta,
                        double eps) {
  auto inv = inv_rms(o::mul(x, x), {2, 3}, eps);
  return o::silu(o::add(o::mul(o::mul(x, inv), gamma), beta));
}

TensorPtr rms_norm_lastdim(const TensorPtr& x, const TensorPtr& gamma, const TensorPtr& beta,
                           double eps) {
  auto inv = inv_rms(o::mul(x, x), {x->shape.rank - 1}, eps);
  return o::add(o::mul(o::mul(x, inv), gamma), beta);
}

CTensor crms_norm_lastdim(const CTensor& x, const TensorPtr& gamma, double eps) {
  auto sq = o::add(o::mul(x.re, x.re), o::mul(x.im, x.im));
  auto inv = inv_rms(sq, {x.re->shape.rank - 1}, eps);
  return {o::mul(o::mul(x.re, inv), gamma), o::mul(o::mul(x.im, inv), gamma)};
}

TensorPtr layer_norm_lastdim(const TensorPtr& x, const TensorPtr& gamma, const TensorPtr& beta,
                             double eps) {
  int last = x->shape.rank - 1;
  auto mu = o::reduce_mean(x, {last}, true);
  auto c = o::sub(x, mu);
  auto inv = inv_rms(o::mul(c, c), {last}, eps);
  return o::add(o::mul(o::mul(c, inv), gamma), beta);
}

TensorPtr gate_psi(const TensorPtr& x, const TensorPtr& a) {
  return o::scale(o::sigmoid(o::mul(a, x)), 3.0);
}

}  // namespace phasor::nn

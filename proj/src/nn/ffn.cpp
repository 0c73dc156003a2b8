// Copyright 2026 the phasor authors
// SPDX-License-Identifier: Apache-2.0

#include "phasor/hadf.hpp"

namespace phasor::nn {

namespace o = phasor::ops;

namespace {

TensorPtr leaky_relu(const TensorPtr& x, double slope) {
  return o::sub(o::relu(x), o::scale(o::relu(o::neg(x)), slope));
}

// [B, L, C] -> [B, C, L, 1] so 1-D convs along L reuse the 2-D kernels.
TensorPtr to_conv(const TensorPtr& x) {
  auto p = o::permute(x, {0, 2, 1});
  return o::reshape(p, Shape{p->shape[0], p->shape[1], p->shape[2], 1});
}

TensorPtr to_seq(const TensorPtr& x) {
  auto r = o::reshape(x, Shape{x->shape[0], x->shape[1], x->shape[2]});
  return o::permute(r, {0, 2, 1});
}

}  // namespace

TensorPtr mag_ffn(const TensorPtr& z, const MagFfnParams& p) {
  auto fwd = o::gru_seq(z, p.w_ih_f, p.w_hh_f, p.b_ih_f, p.b_hh_f, false);
  auto bwd = o::gru_seq(z, p.w_ih_b, p.w_hh_b, p.b_ih_b, p.b_hh_b, true);
  auto hidden = leaky_relu(o::concat_dim({fwd, bwd}, 2), 0.01);
  return o::add(o::matmul(hidden, p.w_out), p.b_out);
}

CTensor pha_ffn(const CTensor& z, const PhaFfnParams& p, bool break_ffn) {
  CTensor zc{to_conv(z.re), to_conv(z.im)};
  auto expanded = o::cconv2d(zc, p.w_expand, o::same_pad(3, 1));
  const int64_t twice = expanded.re->shape[1];
  if (twice % 2 != 0) throw ShapeError("pha_ffn expansion width must be even");
  const int64_t ch = twice / 2;
  CTensor z1{to_seq(o::slice_dim(expanded.re, 1, 0, ch)),
             to_seq(o::slice_dim(expanded.im, 1, 0, ch))};
  CTensor z2{to_seq(o::slice_dim(expanded.re, 1, ch, ch)),
             to_seq(o::slice_dim(expanded.im, 1, ch, ch))};

  CTensor gated;
  if (break_ffn) {
    // ablation: component-wise GLU, no modulus; the gate now sees raw re/im
    // values and rotations no longer cancel.
    auto gr = o::silu(layer_norm_lastdim(z2.re, p.ln_gamma, p.ln_beta));
    auto gi = o::silu(layer_norm_lastdim(z2.im, p.ln_gamma, p.ln_beta));
    gated = CTensor{o::mul(z1.re, gr), o::mul(z1.im, gi)};
  } else {
    auto gate = o::silu(layer_norm_lastdim(o::modulus(z2.re, z2.im), p.ln_gamma, p.ln_beta));
    gated = o::cmul_real(z1, gate);
  }

  CTensor gc{to_conv(gated.re), to_conv(gated.im)};
  auto projected = o::cconv2d(gc, p.w_proj, o::same_pad(3, 1));
  return {to_seq(projected.re), to_seq(projected.im)};
}

}  // namespace phasor::nn

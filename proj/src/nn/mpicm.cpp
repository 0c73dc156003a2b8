// Copyright 2026 the phasor authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "phasor/nn.hpp"

namespace phasor::nn {

namespace o = phasor::ops;

namespace {

TensorPtr uniform_param(Rng& rng, Shape s, double bound) {
  auto t = param(s);
  for (auto& v : t->data) v = rng.uniform(-bound, bound);
  return t;
}

TensorPtr const_param(Shape s, double v) {
  auto t = param(s);
  for (auto& x : t->data) x = v;
  return t;
}

void put(ParamMap& out, const std::string& name, const TensorPtr& t) {
  if (t) out.emplace_back(name, t);
}

}  // namespace

void MpicmParams::collect(const std::string& prefix, ParamMap& out) const {
  put(out, prefix + ".wc_re", wc.re);
  put(out, prefix + ".wc_im", wc.im);
  put(out, prefix + ".wr", wr);
  put(out, prefix + ".br", br);
  put(out, prefix + ".gamma_pha", gamma_pha);
  put(out, prefix + ".gamma_mag", gamma_mag);
  put(out, prefix + ".beta_mag", beta_mag);
  put(out, prefix + ".proj_m_w", proj_m_w);
  put(out, prefix + ".proj_m_b", proj_m_b);
  put(out, prefix + ".proj_p_w", proj_p_w);
  put(out, prefix + ".proj_p_b", proj_p_b);
  put(out, prefix + ".a_mag", a_mag);
  put(out, prefix + ".a_pha", a_pha);
}

MpicmParams make_mpicm(Rng& rng, MpicmMode mode, int64_t c_in_mag, int64_t c_in_pha,
                       int64_t c_out_mag, int64_t c_out_pha, int64_t k_out, int64_t dil_t) {
  MpicmParams p;
  p.mode = mode;
  int64_t kh = 3, kw = 3;
  switch (mode) {
    case MpicmMode::kStandard:
      p.spec = o::same_pad(3, 3, static_cast<int>(dil_t), 1);
      break;
    case MpicmMode::kExpandNoGate:
      p.spec = o::same_pad(3, 3, 1, 1);
      break;
    case MpicmMode::kDownsample:
    case MpicmMode::kUpsample:
      kh = 1;
      kw = 3;
      p.spec = o::Conv2dSpec{};
      p.spec.stride_w = 2;
      break;
  }
  const bool transposed = mode == MpicmMode::kUpsample;
  // Transposed kernels store [C_in, C_out, kh, kw]; direct ones [C_out, C_in, kh, kw].
  Shape wc_shape = transposed ? Shape{c_in_pha, c_out_pha, kh, kw}
                              : Shape{c_out_pha, c_in_pha, kh, kw};
  Shape wr_shape = transposed ? Shape{c_in_mag, c_out_mag, kh, kw}
                              : Shape{c_out_mag, c_in_mag, kh, kw};
  const double fan_pha = static_cast<double>(c_in_pha * kh * kw);
  const double fan_mag = static_cast<double>(c_in_mag * kh * kw);
  p.wc.re = uniform_param(rng, wc_shape, std::sqrt(1.0 / (2.0 * fan_pha)));
  p.wc.im = uniform_param(rng, wc_shape, std::sqrt(1.0 / (2.0 * fan_pha)));
  p.wr = uniform_param(rng, wr_shape, std::sqrt(1.0 / fan_mag));
  p.br = const_param(Shape{c_out_mag}, 0.0);
  p.gamma_pha = const_param(Shape{1, c_out_pha, 1, k_out}, 1.0);
  p.gamma_mag = const_param(Shape{1, c_out_mag, 1, 1}, 1.0);
  p.beta_mag = const_param(Shape{1, c_out_mag, 1, 1}, 0.0);
  if (mode != MpicmMode::kExpandNoGate) {
    p.proj_m_w = uniform_param(rng, Shape{c_out_mag, c_out_pha, 1, 1},
                               std::sqrt(1.0 / static_cast<double>(c_out_pha)));
    p.proj_m_b = const_param(Shape{c_out_mag}, 0.0);
    p.proj_p_w = uniform_param(rng, Shape{c_out_pha, c_out_mag, 1, 1},
                               std::sqrt(1.0 / static_cast<double>(c_out_mag)));
    p.proj_p_b = const_param(Shape{c_out_pha}, 0.0);
    p.a_mag = const_param(Shape{1, c_out_mag, 1, k_out}, 1.0);
    p.a_pha = const_param(Shape{1, c_out_pha, 1, k_out}, 1.0);
  }
  return p;
}

StreamPair mpicm_forward(const StreamPair& in, const MpicmParams& p) {
  if (in.mag->shape[2] != in.pha.re->shape[2] || in.mag->shape[3] != in.pha.re->shape[3])
    throw ShapeError("mpicm streams disagree on the spatial plane: " + in.mag->shape.str() +
                     " vs " + in.pha.re->shape.str());
  CTensor pc;
  TensorPtr mc;
  if (p.mode == MpicmMode::kUpsample) {
    pc = o::cconv2d_transpose(in.pha, p.wc, p.spec);
    mc = o::conv2d_transpose(in.mag, p.wr, p.br, p.spec);
  } else {
    pc = o::cconv2d(in.pha, p.wc, p.spec);
    mc = o::conv2d(in.mag, p.wr, p.br, p.spec);
  }
  auto pt = crms_norm(pc, p.gamma_pha);
  auto mt = rms_norm_silu(mc, p.gamma_mag, p.beta_mag);
  if (p.mode == MpicmMode::kExpandNoGate) return {mt, pt};

  // Cross gating: each stream is modulated by a rotation-invariant view of
  // the other. The break mode feeds re+im instead of the modulus, which is
  // exactly the ablation that loses equivariance.
  auto gate_in_m = p.break_gate ? o::add(pt.re, pt.im) : o::cmodulus(pt);
  auto psi_m = gate_psi(o::conv2d(gate_in_m, p.proj_m_w, p.proj_m_b, o::Conv2dSpec{}), p.a_mag);
  auto psi_p = gate_psi(o::conv2d(mt, p.proj_p_w, p.proj_p_b, o::Conv2dSpec{}), p.a_pha);
  return {o::mul(mt, psi_m), o::cmul_real(pt, psi_p)};
}

void DenseBlockParams::collect(const std::string& prefix, ParamMap& out) const {
  for (size_t i = 0; i < layers.size(); ++i)
    layers[i].collect(prefix + ".l" + std::to_string(i), out);
}

DenseBlockParams make_dense_block(Rng& rng, int64_t c_mag, int64_t c_pha, int64_t k_out,
                                  bool break_gate) {
  DenseBlockParams p;
  const int64_t dils[4] = {1, 2, 4, 8};
  for (int i = 0; i < 4; ++i) {
    auto layer = make_mpicm(rng, MpicmMode::kStandard, (i + 1) * c_mag, (i + 1) * c_pha,
                            c_mag, c_pha, k_out, dils[i]);
    layer.break_gate = break_gate;
    p.layers.push_back(layer);
  }
  return p;
}

StreamPair dense_block(const StreamPair& in, const DenseBlockParams& p) {
  std::vector<TensorPtr> mags{in.mag}, res{in.pha.re}, ims{in.pha.im};
  StreamPair out = in;
  for (const auto& layer : p.layers) {
    StreamPair cat;
    if (mags.size() == 1) {
      cat = in;
    } else {
      cat.mag = o::concat_dim(mags, 1);
      cat.pha = CTensor{o::concat_dim(res, 1), o::concat_dim(ims, 1)};
    }
    out = mpicm_forward(cat, layer);
    mags.push_back(out.mag);
    res.push_back(out.pha.re);
    ims.push_back(out.pha.im);
  }
  return out;
}

}  // namespace phasor::nn

// Copyright 2026 the phasor authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "phasor/hadf.hpp"

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

CTensor complex_param(Rng& rng, Shape s, double fan_in) {
  double b = std::sqrt(1.0 / (2.0 * fan_in));
  return {uniform_param(rng, s, b), uniform_param(rng, s, b)};
}

void put(ParamMap& out, const std::string& name, const TensorPtr& t) {
  if (t) out.emplace_back(name, t);
}

}  // namespace

void HadfParams::collect(const std::string& prefix, ParamMap& out) const {
  for (size_t h = 0; h < wq_mag.size(); ++h) {
    auto hp = prefix + ".h" + std::to_string(h);
    put(out, hp + ".wq_mag", wq_mag[h]);
    put(out, hp + ".wk_mag", wk_mag[h]);
    put(out, hp + ".wv_mag", wv_mag[h]);
    put(out, hp + ".wq_pha_re", wq_pha[h].re);
    put(out, hp + ".wq_pha_im", wq_pha[h].im);
    put(out, hp + ".wk_pha_re", wk_pha[h].re);
    put(out, hp + ".wk_pha_im", wk_pha[h].im);
    put(out, hp + ".wv_pha_re", wv_pha[h].re);
    put(out, hp + ".wv_pha_im", wv_pha[h].im);
  }
  put(out, prefix + ".wo_mag", wo_mag);
  put(out, prefix + ".bo_mag", bo_mag);
  put(out, prefix + ".wo_pha_re", wo_pha.re);
  put(out, prefix + ".wo_pha_im", wo_pha.im);
  put(out, prefix + ".ffn_mag.w_ih_f", ffn_mag.w_ih_f);
  put(out, prefix + ".ffn_mag.w_hh_f", ffn_mag.w_hh_f);
  put(out, prefix + ".ffn_mag.b_ih_f", ffn_mag.b_ih_f);
  put(out, prefix + ".ffn_mag.b_hh_f", ffn_mag.b_hh_f);
  put(out, prefix + ".ffn_mag.w_ih_b", ffn_mag.w_ih_b);
  put(out, prefix + ".ffn_mag.w_hh_b", ffn_mag.w_hh_b);
  put(out, prefix + ".ffn_mag.b_ih_b", ffn_mag.b_ih_b);
  put(out, prefix + ".ffn_mag.b_hh_b", ffn_mag.b_hh_b);
  put(out, prefix + ".ffn_mag.w_out", ffn_mag.w_out);
  put(out, prefix + ".ffn_mag.b_out", ffn_mag.b_out);
  put(out, prefix + ".ffn_pha.w_expand_re", ffn_pha.w_expand.re);
  put(out, prefix + ".ffn_pha.w_expand_im", ffn_pha.w_expand.im);
  put(out, prefix + ".ffn_pha.ln_gamma", ffn_pha.ln_gamma);
  put(out, prefix + ".ffn_pha.ln_beta", ffn_pha.ln_beta);
  put(out, prefix + ".ffn_pha.w_proj_re", ffn_pha.w_proj.re);
  put(out, prefix + ".ffn_pha.w_proj_im", ffn_pha.w_proj.im);
  put(out, prefix + ".n1_mag_g", n1_mag_g);
  put(out, prefix + ".n1_mag_b", n1_mag_b);
  put(out, prefix + ".n2_mag_g", n2_mag_g);
  put(out, prefix + ".n2_mag_b", n2_mag_b);
  put(out, prefix + ".n3_mag_g", n3_mag_g);
  put(out, prefix + ".n3_mag_b", n3_mag_b);
  put(out, prefix + ".n1_pha_g", n1_pha_g);
  put(out, prefix + ".n2_pha_g", n2_pha_g);
  put(out, prefix + ".n3_pha_g", n3_pha_g);
}

HadfParams make_hadf(Rng& rng, const HadfConfig& cfg) {
  if (cfg.c_mag < 1 || cfg.c_pha < 1 || cfg.c_mag_head < 1 || cfg.c_pha_head < 1 ||
      cfg.c_mag_hidden < 1 || cfg.c_pha_hidden < 1 || cfg.n_heads < 1)
    throw ValueError("make_hadf: every width must be positive");
  if (cfg.c_mag_hidden % 2 != 0)
    throw ValueError("make_hadf: c_mag_hidden must be even (two GRU directions)");
  HadfParams p;
  p.cfg = cfg;
  const double bm = std::sqrt(1.0 / static_cast<double>(cfg.c_mag));
  for (int64_t h = 0; h < cfg.n_heads; ++h) {
    p.wq_mag.push_back(uniform_param(rng, Shape{cfg.c_mag, cfg.c_mag_head}, bm));
    p.wk_mag.push_back(uniform_param(rng, Shape{cfg.c_mag, cfg.c_mag_head}, bm));
    p.wv_mag.push_back(uniform_param(rng, Shape{cfg.c_mag, cfg.c_mag_head}, bm));
    p.wq_pha.push_back(complex_param(rng, Shape{cfg.c_pha, cfg.c_pha_head},
                                     static_cast<double>(cfg.c_pha)));
    p.wk_pha.push_back(complex_param(rng, Shape{cfg.c_pha, cfg.c_pha_head},
                                     static_cast<double>(cfg.c_pha)));
    p.wv_pha.push_back(complex_param(rng, Shape{cfg.c_pha, cfg.c_pha_head},
                                     static_cast<double>(cfg.c_pha)));
  }
  const int64_t cat_mag = cfg.n_heads * cfg.c_mag_head;
  const int64_t cat_pha = cfg.n_heads * cfg.c_pha_head;
  p.wo_mag = uniform_param(rng, Shape{cat_mag, cfg.c_mag},
                           std::sqrt(1.0 / static_cast<double>(cat_mag)));
  p.bo_mag = const_param(Shape{cfg.c_mag}, 0.0);
  p.wo_pha = complex_param(rng, Shape{cat_pha, cfg.c_pha}, static_cast<double>(cat_pha));

  const int64_t hid = cfg.c_mag_hidden / 2;
  const double bg = std::sqrt(1.0 / static_cast<double>(hid));
  p.ffn_mag.w_ih_f = uniform_param(rng, Shape{3 * hid, cfg.c_mag}, bg);
  p.ffn_mag.w_hh_f = uniform_param(rng, Shape{3 * hid, hid}, bg);
  p.ffn_mag.b_ih_f = const_param(Shape{3 * hid}, 0.0);
  p.ffn_mag.b_hh_f = const_param(Shape{3 * hid}, 0.0);
  p.ffn_mag.w_ih_b = uniform_param(rng, Shape{3 * hid, cfg.c_mag}, bg);
  p.ffn_mag.w_hh_b = uniform_param(rng, Shape{3 * hid, hid}, bg);
  p.ffn_mag.b_ih_b = const_param(Shape{3 * hid}, 0.0);
  p.ffn_mag.b_hh_b = const_param(Shape{3 * hid}, 0.0);
  p.ffn_mag.w_out = uniform_param(rng, Shape{cfg.c_mag_hidden, cfg.c_mag},
                                  std::sqrt(1.0 / static_cast<double>(cfg.c_mag_hidden)));
  p.ffn_mag.b_out = const_param(Shape{cfg.c_mag}, 0.0);

  p.ffn_pha.w_expand = complex_param(rng, Shape{2 * cfg.c_pha_hidden, cfg.c_pha, 3, 1},
                                     static_cast<double>(3 * cfg.c_pha));
  p.ffn_pha.ln_gamma = const_param(Shape{cfg.c_pha_hidden}, 1.0);
  p.ffn_pha.ln_beta = const_param(Shape{cfg.c_pha_hidden}, 0.0);
  p.ffn_pha.w_proj = complex_param(rng, Shape{cfg.c_pha, cfg.c_pha_hidden, 3, 1},
                                   static_cast<double>(3 * cfg.c_pha_hidden));

  p.n1_mag_g = const_param(Shape{cfg.c_mag}, 1.0);
  p.n1_mag_b = const_param(Shape{cfg.c_mag}, 0.0);
  p.n2_mag_g = const_param(Shape{cfg.c_mag}, 1.0);
  p.n2_mag_b = const_param(Shape{cfg.c_mag}, 0.0);
  p.n3_mag_g = const_param(Shape{cfg.c_mag}, 1.0);
  p.n3_mag_b = const_param(Shape{cfg.c_mag}, 0.0);
  p.n1_pha_g = const_param(Shape{cfg.c_pha}, 1.0);
  p.n2_pha_g = const_param(Shape{cfg.c_pha}, 1.0);
  p.n3_pha_g = const_param(Shape{cfg.c_pha}, 1.0);
  return p;
}

SeqPair hadf_block(const SeqPair& z, const HadfParams& p, AttentionExport* export_out) {
  SeqPair normed{rms_norm_lastdim(z.mag, p.n1_mag_g, p.n1_mag_b),
                 crms_norm_lastdim(z.pha, p.n1_pha_g)};
  auto attn = hybrid_attention(normed, p, export_out);
  auto r1_mag = o::add(z.mag, attn.mag);
  auto r1_pha = o::cadd(z.pha, attn.pha);

  auto f_mag = mag_ffn(rms_norm_lastdim(r1_mag, p.n2_mag_g, p.n2_mag_b), p.ffn_mag);
  auto f_pha = pha_ffn(crms_norm_lastdim(r1_pha, p.n2_pha_g), p.ffn_pha, p.cfg.break_ffn);
  auto r2_mag = o::add(r1_mag, f_mag);
  auto r2_pha = o::cadd(r1_pha, f_pha);

  SeqPair post{rms_norm_lastdim(r2_mag, p.n3_mag_g, p.n3_mag_b),
               crms_norm_lastdim(r2_pha, p.n3_pha_g)};
  // block-level global residual
  return {o::add(z.mag, post.mag), o::cadd(z.pha, post.pha)};
}

void DualPathParams::collect(const std::string& prefix, ParamMap& out) const {
  for (size_t i = 0; i < time_blocks.size(); ++i)
    time_blocks[i].collect(prefix + ".t" + std::to_string(i), out);
  for (size_t i = 0; i < freq_blocks.size(); ++i)
    freq_blocks[i].collect(prefix + ".f" + std::to_string(i), out);
}

DualPathParams make_dual_path(Rng& rng, const HadfConfig& cfg, int64_t n) {
  DualPathParams p;
  for (int64_t i = 0; i < n; ++i) p.time_blocks.push_back(make_hadf(rng, cfg));
  for (int64_t i = 0; i < n; ++i) p.freq_blocks.push_back(make_hadf(rng, cfg));
  return p;
}

TensorPtr fold_time(const TensorPtr& x) {
  auto pm = o::permute(x, {0, 3, 2, 1});
  return o::reshape(pm, Shape{pm->shape[0] * pm->shape[1], pm->shape[2], pm->shape[3]});
}

TensorPtr unfold_time(const TensorPtr& x, int64_t b, int64_t f) {
  auto r = o::reshape(x, Shape{b, f, x->shape[1], x->shape[2]});
  return o::permute(r, {0, 3, 2, 1});
}

TensorPtr fold_freq(const TensorPtr& x) {
  auto pm = o::permute(x, {0, 2, 3, 1});
  return o::reshape(pm, Shape{pm->shape[0] * pm->shape[1], pm->shape[2], pm->shape[3]});
}

TensorPtr unfold_freq(const TensorPtr& x, int64_t b, int64_t t) {
  auto r = o::reshape(x, Shape{b, t, x->shape[1], x->shape[2]});
  return o::permute(r, {0, 3, 1, 2});
}

StreamPair dual_path(const StreamPair& in, const DualPathParams& p, const AttnProbe& probe) {
  if (p.time_blocks.size() != p.freq_blocks.size())
    throw ValueError("dual_path: time/freq block counts differ");
  if (probe.out &&
      (probe.block < 0 || probe.block >= static_cast<int64_t>(p.time_blocks.size())))
    throw ValueError("dual_path: probe block " + std::to_string(probe.block) +
                     " outside the stack of " + std::to_string(p.time_blocks.size()));
  const int64_t b = in.mag->shape[0], t = in.mag->shape[2], f = in.mag->shape[3];
  TensorPtr m = in.mag;
  CTensor ph = in.pha;
  for (size_t i = 0; i < p.time_blocks.size(); ++i) {
    const bool here = probe.out && probe.block == static_cast<int64_t>(i);
    SeqPair seq{fold_time(m), CTensor{fold_time(ph.re), fold_time(ph.im)}};
    auto yt = hadf_block(seq, p.time_blocks[i], here && !probe.freq_axis ? probe.out : nullptr);
    m = unfold_time(yt.mag, b, f);
    ph = CTensor{unfold_time(yt.pha.re, b, f), unfold_time(yt.pha.im, b, f)};

    SeqPair fs{fold_freq(m), CTensor{fold_freq(ph.re), fold_freq(ph.im)}};
    auto yf = hadf_block(fs, p.freq_blocks[i], here && probe.freq_axis ? probe.out : nullptr);
    m = unfold_freq(yf.mag, b, t);
    ph = CTensor{unfold_freq(yf.pha.re, b, t), unfold_freq(yf.pha.im, b, t)};
  }
  return {m, ph};
}

StreamPair dual_path(const StreamPair& in, const DualPathParams& p,
                     AttentionExport* export_out) {
  return dual_path(in, p, AttnProbe{export_out, 0, false});
}

}  // namespace phasor::nn

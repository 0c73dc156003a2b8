// Copyright 2026 the phasor authors
// SPDX-License-Identifier: Apache-2.0
//
// Finite-difference gradient audit: one entry per primitive op, the composite
// objective through a one-block network slice at tiny widths, the all-zero
// slice, and a negative control with a deliberately wrong adjoint that the
// check must flag. Fixtures are frozen off the run seed, so two runs with the
// same seed report identical numbers.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "phasor/harness.hpp"
#include "phasor/tape.hpp"

namespace phasor::harness {

namespace o = phasor::ops;
using namespace phasor::nn;

namespace {

constexpr double kTol = 1e-4;
constexpr double kAdjointFloor = 1e-2;

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

double fd_check(const std::function<TensorPtr()>& loss_fn, const std::vector<TensorPtr>& inputs,
                double h = 1e-5) {
  for (const auto& p : inputs) {
    p->requires_grad = true;
    p->grad.clear();
  }
  {
    TapeScope scope;
    scope.tape().backward(loss_fn());
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
      worst = std::max(worst, rel_err(p->grad[i], (lp - lm) / (2.0 * h)));
    }
  }
  return worst;
}

TensorPtr randn(Rng& rng, Shape s, double scale = 1.0) {
  auto t = zeros(s);
  for (auto& v : t->data) v = scale * rng.normal();
  return t;
}

TensorPtr randu(Rng& rng, Shape s, double lo, double hi) {
  auto t = zeros(s);
  for (auto& v : t->data) v = rng.uniform(lo, hi);
  return t;
}

// Pushes values away from a kink at `center` so central differences stay on
// one smooth branch.
TensorPtr rand_off(Rng& rng, Shape s, double margin, double center = 0.0) {
  auto t = zeros(s);
  for (auto& v : t->data) {
    double x = rng.normal();
    if (std::abs(x - center) < margin) x = center + (x >= center ? margin : -margin);
    v = x;
  }
  return t;
}

// Negative control: d(x^2)/dx reported as 3x instead of 2x.
TensorPtr broken_square(const TensorPtr& a) {
  auto out = zeros(a->shape);
  for (size_t i = 0; i < a->data.size(); ++i) out->data[i] = a->data[i] * a->data[i];
  if (Tape::current() && a->requires_grad) {
    out->requires_grad = true;
    Tape::current()->push([a, out] {
      out->ensure_grad();
      a->ensure_grad();
      for (size_t i = 0; i < a->data.size(); ++i) a->grad[i] += 3.0 * a->data[i] * out->grad[i];
    });
  }
  return out;
}

ModelConfig slice_cfg() {
  ModelConfig c;
  c.c_mag = 4;
  c.c_pha = 2;
  c.c_mag_head = 2;
  c.c_pha_head = 1;
  c.c_mag_hidden = 4;
  c.c_pha_hidden = 2;
  c.n_heads = 2;
  c.n_dual_path = 1;
  c.freq_bins = 7;
  return c;
}

dsp::StftConfig slice_stft() {
  dsp::StftConfig s;
  s.sample_rate = 8000;
  s.win_len = 12;
  s.hop = 3;
  s.fft_size = 12;
  return s;
}

// The composite objective through the slice; everything the network touches
// stays on the tape, targets are plain data.
TensorPtr slice_loss(const Network& net, const SpectrumPair& feats,
                     const loss::SpectrumTarget& target, const loss::LossWeights& w) {
  auto est = forward(net, feats);
  const int64_t t = est.mag->shape[1], f = est.mag->shape[2];
  loss::SpectrumPrediction pred;
  pred.mag = o::reshape(est.mag, Shape{t, f});
  pred.pha = {o::reshape(est.pha.re, Shape{t, f}), o::reshape(est.pha.im, Shape{t, f})};
  auto full = o::cmul_real(pred.pha, o::pow_const(pred.mag, 1.0 / 0.3));
  pred.wave = dsp::istft(full, slice_stft());
  pred.respec = dsp::stft(pred.wave, slice_stft());
  return loss::composite_loss(loss::LossKind::DN, pred, target, 0.3, w).total;
}

}  // namespace

GradCheckReport run_gradcheck(const RunConfig& cfg) {
  GradCheckReport report;
  auto entry = [&](const std::string& name, double err, double tol = kTol, bool invert = false) {
    GradCheckEntry e;
    e.name = name;
    e.max_rel_err = err;
    e.tolerance = tol;
    e.pass = invert ? err > tol : err <= tol;
    report.entries.push_back(e);
  };

  Rng rng(cfg.seed);

  {  // elementwise arithmetic with broadcasting
    auto a = randn(rng, Shape{2, 3});
    auto b = randn(rng, Shape{1, 3});
    auto wsum = [&](TensorPtr x) { return o::sum_all(x); };
    entry("add", fd_check([&] { return wsum(o::add(a, b)); }, {a, b}));
    entry("sub", fd_check([&] { return wsum(o::sub(a, b)); }, {a, b}));
    entry("mul", fd_check([&] { return wsum(o::mul(a, b)); }, {a, b}));
    auto d = randu(rng, Shape{1, 3}, 0.5, 2.0);
    entry("div", fd_check([&] { return wsum(o::div(a, d)); }, {a, d}));
    entry("scale_add_const_neg",
          fd_check([&] { return wsum(o::neg(o::add_const(o::scale(a, 1.7), 0.3))); }, {a}));
  }
  {  // smooth activations
    auto a = randn(rng, Shape{2, 4});
    entry("sigmoid", fd_check([&] { return o::sum_all(o::sigmoid(a)); }, {a}));
    entry("tanh", fd_check([&] { return o::sum_all(o::tanh_op(a)); }, {a}));
    entry("silu", fd_check([&] { return o::sum_all(o::silu(a)); }, {a}));
  }
  {  // kinked and guarded maps, fixtures off their kinks
    auto a = rand_off(rng, Shape{2, 4}, 0.05);
    entry("relu", fd_check([&] { return o::sum_all(o::relu(a)); }, {a}));
    entry("abs", fd_check([&] { return o::sum_all(o::abs_op(a)); }, {a}));
    auto p = randu(rng, Shape{2, 4}, 0.3, 2.0);
    entry("sqrt", fd_check([&] { return o::sum_all(o::sqrt_op(p)); }, {p}));
    entry("pow_const", fd_check([&] { return o::sum_all(o::pow_const(p, 0.3)); }, {p}));
    auto aw_in = randu(rng, Shape{2, 4}, 0.3, 2.5);
    entry("anti_wrap", fd_check([&] { return o::sum_all(o::anti_wrap(aw_in)); }, {aw_in}));
  }
  {  // two-argument angle/modulus maps
    auto y = rand_off(rng, Shape{2, 3}, 0.1);
    auto x = randu(rng, Shape{2, 3}, 0.5, 1.5);
    entry("atan2", fd_check([&] { return o::sum_all(o::atan2_op(y, x)); }, {y, x}));
    entry("modulus", fd_check([&] { return o::sum_all(o::modulus(y, x)); }, {y, x}));
    CTensor z{randu(rng, Shape{2, 3}, 0.4, 1.5), randu(rng, Shape{2, 3}, 0.4, 1.5)};
    auto wr = randn(rng, Shape{2, 3});
    entry("cnormalize", fd_check(
                            [&] {
                              auto n = o::cnormalize(z);
                              return o::sum_all(o::add(o::mul(n.re, wr), n.im));
                            },
                            {z.re, z.im}));
  }
  {  // reductions
    auto a = randn(rng, Shape{2, 3, 4});
    entry("reduce_sum",
          fd_check([&] { return o::sum_all(o::pow_const(o::add_const(o::reduce_sum(a, {1}, false), 5.0), 2.0)); }, {a}));
    entry("reduce_mean",
          fd_check([&] { return o::sum_all(o::pow_const(o::add_const(o::reduce_mean(a, {0, 2}, true), 5.0), 2.0)); }, {a}));
    entry("mean_all", fd_check([&] { return o::mean_all(o::mul(a, a)); }, {a}));
  }
  {  // linear algebra
    auto a = randn(rng, Shape{3, 4});
    auto w = randn(rng, Shape{4, 2});
    entry("matmul", fd_check([&] { return o::sum_all(o::pow_const(o::matmul(a, w), 2.0)); },
                             {a, w}));
    auto ba = randn(rng, Shape{2, 3, 4});
    auto bb = randn(rng, Shape{2, 5, 4});
    entry("bmm_t", fd_check([&] { return o::sum_all(o::pow_const(o::bmm(ba, bb, true), 2.0)); },
                            {ba, bb}));
    auto sc = randn(rng, Shape{2, 3, 4});
    entry("softmax", fd_check(
                         [&] {
                           auto s = o::softmax_lastdim(sc);
                           return o::sum_all(o::mul(s, ba));
                         },
                         {sc}));
  }
  {  // data movement
    auto a = randn(rng, Shape{2, 3, 4});
    entry("slice_concat", fd_check(
                              [&] {
                                auto lo = o::slice_dim(a, 1, 0, 2);
                                auto hi = o::slice_dim(a, 1, 2, 1);
                                auto cat = o::concat_dim({hi, lo}, 1);
                                return o::sum_all(o::pow_const(cat, 2.0));
                              },
                              {a}));
    entry("permute_reshape", fd_check(
                                 [&] {
                                   auto pm = o::permute(a, {2, 0, 1});
                                   auto rs = o::reshape(pm, Shape{4, 6});
                                   return o::sum_all(o::pow_const(rs, 2.0));
                                 },
                                 {a}));
  }
  {  // convolutions
    auto x = randn(rng, Shape{1, 2, 4, 5});
    auto w = randn(rng, Shape{3, 2, 3, 3});
    auto b = randn(rng, Shape{3});
    auto spec = o::same_pad(3, 3, 1, 2);
    entry("conv2d", fd_check(
                        [&] { return o::sum_all(o::pow_const(o::conv2d(x, w, b, spec), 2.0)); },
                        {x, w, b}));
    auto wt = randn(rng, Shape{2, 3, 1, 3});
    o::Conv2dSpec up;
    up.stride_w = 2;
    entry("conv2d_transpose",
          fd_check(
              [&] { return o::sum_all(o::pow_const(o::conv2d_transpose(x, wt, b, up), 2.0)); },
              {x, wt, b}));
  }
  {  // recurrence, both scan directions
    auto x = randn(rng, Shape{2, 3, 3});
    auto w_ih = randn(rng, Shape{6, 3}, 0.5);
    auto w_hh = randn(rng, Shape{6, 2}, 0.5);
    auto b_ih = randn(rng, Shape{6}, 0.2);
    auto b_hh = randn(rng, Shape{6}, 0.2);
    entry("gru_forward",
          fd_check(
              [&] {
                return o::sum_all(
                    o::pow_const(o::gru_seq(x, w_ih, w_hh, b_ih, b_hh, false), 2.0));
              },
              {x, w_ih, w_hh, b_ih, b_hh}));
    entry("gru_reverse",
          fd_check(
              [&] {
                return o::sum_all(o::pow_const(o::gru_seq(x, w_ih, w_hh, b_ih, b_hh, true), 2.0));
              },
              {x, w_ih, w_hh, b_ih, b_hh}));
  }
  {  // framing pair and the analysis/synthesis transforms
    auto x = randn(rng, Shape{12});
    entry("frame_overlap", fd_check(
                               [&] {
                                 auto fr = o::frame_signal(x, 6, 3);
                                 auto y = o::overlap_add(fr, 3, 12);
                                 return o::sum_all(o::pow_const(y, 2.0));
                               },
                               {x}));
    auto sx = randn(rng, Shape{6});
    entry("stft_istft", fd_check(
                            [&] {
                              auto sp = dsp::stft(sx, slice_stft());
                              auto y = dsp::istft(sp, slice_stft());
                              return o::sum_all(o::pow_const(y, 2.0));
                            },
                            {sx}));
  }

  {  // the composite objective through a one-block slice
    Rng srng(cfg.seed + 100);
    auto mc = slice_cfg();
    auto net = make_network(srng, mc);
    SpectrumPair feats;
    feats.mag = randu(srng, Shape{1, 3, 7}, 0.5, 2.0);
    feats.pha.re = zeros(Shape{1, 3, 7});
    feats.pha.im = zeros(Shape{1, 3, 7});
    for (size_t i = 0; i < feats.pha.re->data.size(); ++i) {
      double phi = srng.uniform(-kPi, kPi);
      feats.pha.re->data[i] = std::cos(phi);
      feats.pha.im->data[i] = std::sin(phi);
    }
    auto wave = randn(srng, Shape{6}, 0.5);
    auto spec = dsp::stft(wave, slice_stft());
    loss::SpectrumTarget target;
    target.mag = zeros(Shape{3, 7});
    target.phase = zeros(Shape{3, 7});
    for (size_t i = 0; i < spec.re->data.size(); ++i) {
      double re = spec.re->data[i], im = spec.im->data[i];
      target.mag->data[i] = std::pow(std::hypot(re, im), 0.3);
      target.phase->data[i] = std::atan2(im, re);
    }
    target.wave = wave;
    loss::LossWeights w;

    ParamMap params;
    net.collect(params);
    std::vector<TensorPtr> tensors;
    for (auto& [name, t] : params) tensors.push_back(t);
    entry("composite_slice",
          fd_check([&] { return slice_loss(net, feats, target, w); }, tensors));

    // All-zero slice: the objective is flat in every parameter, and the
    // analytic gradients must agree with that.
    for (auto& t : tensors) std::fill(t->data.begin(), t->data.end(), 0.0);
    loss::LossWeights wt_only;
    wt_only.w_mag = wt_only.w_pha = wt_only.w_com = wt_only.w_con = 0.0;
    entry("zero_params_l_time",
          fd_check([&] { return slice_loss(net, feats, target, wt_only); },
                   {net.head_mag_w, net.head_mag_b, net.head_pha_w.re, net.head_pha_w.im}));
  }

  {  // the audit itself must catch a wrong adjoint
    Rng nrng(cfg.seed + 200);
    auto x = rand_off(nrng, Shape{5}, 0.3);
    double err = fd_check([&] { return o::sum_all(broken_square(x)); }, {x});
    entry("wrong_adjoint_caught", err, kAdjointFloor, true);
  }

  bool all = true;
  for (const auto& e : report.entries) all = all && e.pass;
  report.suite_pass = all;
  return report;
}

}  // namespace phasor::harness

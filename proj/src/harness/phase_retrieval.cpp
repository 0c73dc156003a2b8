// Copyright 2026 the phasor authors
// SPDX-License-Identifier: Apache-2.0
//
// Single-utterance phase retrieval: the network sees the clean compressed
// magnitude with all-zero phase and is overfit by plain gradient descent on
// the omnidirectional phase objective until it halves (or the step budget
// runs out). Griffin-Lim on the same magnitude provides the iterative
// baseline number.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "phasor/harness.hpp"
#include "phasor/tape.hpp"

namespace phasor::harness {

namespace o = phasor::ops;
using namespace phasor::nn;

namespace {

constexpr double kClipNorm = 5.0;
constexpr double kHalved = 0.5;

struct Targets {
  TensorPtr comp_mag;  // [T, F] compressed, network input and weight source
  TensorPtr angles;    // [T, F] reference phase
  TensorPtr omni_w;    // [T, F] clean magnitude normalized to sum 1
  TensorPtr clean_mag; // [T, F] uncompressed, metric weighting
};

Targets analyze(const std::vector<double>& wave, const dsp::StftConfig& scfg, double alpha) {
  auto padded = dsp::pad_to_hop(wave, scfg);
  auto x = zeros(Shape{(int64_t)padded.size()});
  std::copy(padded.begin(), padded.end(), x->data.begin());
  auto spec = dsp::stft(x, scfg);

  Targets t;
  t.comp_mag = zeros(spec.re->shape);
  t.angles = zeros(spec.re->shape);
  t.omni_w = zeros(spec.re->shape);
  t.clean_mag = zeros(spec.re->shape);
  double mass = 0.0;
  for (size_t i = 0; i < spec.re->data.size(); ++i) {
    const double m = std::hypot(spec.re->data[i], spec.im->data[i]);
    t.clean_mag->data[i] = m;
    t.comp_mag->data[i] = std::pow(m, alpha);
    t.angles->data[i] = std::atan2(spec.im->data[i], spec.re->data[i]);
    mass += m;
  }
  if (mass <= 0.0) throw ValueError("phase retrieval needs a non-silent utterance");
  for (size_t i = 0; i < t.omni_w->data.size(); ++i)
    t.omni_w->data[i] = t.clean_mag->data[i] / mass;
  return t;
}

// Angles of the network's phase estimate for the zero-phase input. Eager when
// no tape is installed.
TensorPtr predict_angles(const Network& net, const SpectrumPair& feats) {
  auto est = forward(net, feats);
  const int64_t t = est.pha.re->shape[1], f = est.pha.re->shape[2];
  auto re = o::reshape(est.pha.re, Shape{t, f});
  auto im = o::reshape(est.pha.im, Shape{t, f});
  return o::atan2_op(im, re);
}

}  // namespace

PhaseRetrievalReport run_phase_retrieval(const RunConfig& cfg, const std::vector<double>& wave) {
  dsp::StftConfig scfg;
  if (wave.empty()) throw ValueError("phase retrieval needs a non-empty waveform");
  if ((int64_t)wave.size() > 2 * (int64_t)scfg.sample_rate)
    throw ValueError("phase retrieval expects at most 2 s of audio");

  auto mc = named_model(cfg.model);
  Rng rng(cfg.seed);
  auto net = make_network(rng, mc);

  auto tg = analyze(wave, scfg, mc.alpha);
  const int64_t t_frames = tg.comp_mag->shape[0], f_bins = tg.comp_mag->shape[1];
  if (f_bins != mc.freq_bins) throw ValueError("model frequency bins do not match the transform");

  SpectrumPair feats;
  feats.mag = o::reshape(tg.comp_mag, Shape{1, t_frames, f_bins});
  feats.pha.re = zeros(Shape{1, t_frames, f_bins});
  feats.pha.im = zeros(Shape{1, t_frames, f_bins});
  std::fill(feats.pha.re->data.begin(), feats.pha.re->data.end(), 1.0);

  PhaseRetrievalReport rep;
  auto zero_phase = zeros(Shape{t_frames, f_bins});
  rep.initial_pd_deg = loss::pd_metric(zero_phase, tg.angles, tg.clean_mag);
  rep.initial_wopd = loss::wopd_metric(zero_phase, tg.angles, tg.clean_mag);

  {
    auto gl = dsp::griffin_lim(tg.clean_mag, scfg, 32);
    auto gl_angles = o::atan2_op(gl.im, gl.re);
    rep.gl_pd_deg = loss::pd_metric(gl_angles, tg.angles, tg.clean_mag);
  }

  ParamMap params;
  net.collect(params);

  for (int step = 0; step < cfg.steps; ++step) {
    TapeScope scope;
    auto pred = predict_angles(net, feats);
    auto omni = loss::omni_loss(pred, tg.angles, tg.omni_w);
    const double omni_val = omni->data[0];
    if (!std::isfinite(omni_val))
      throw ValueError("phase retrieval diverged at step " + std::to_string(step));
    rep.loss_curve.push_back(omni_val);
    if (omni_val <= kHalved * 0.9 * rep.loss_curve.front()) break;

    scope.tape().backward(o::scale(omni, loss::LossWeights{}.w_omni));
    double sq = 0.0;
    for (auto& [name, p] : params) {
      if (p->grad.empty()) continue;
      for (double g : p->grad) sq += g * g;
    }
    const double norm = std::sqrt(sq);
    const double mult = norm > kClipNorm ? kClipNorm / norm : 1.0;
    for (auto& [name, p] : params) {
      if (p->grad.empty()) continue;
      for (size_t i = 0; i < p->data.size(); ++i) p->data[i] -= cfg.lr * mult * p->grad[i];
      std::fill(p->grad.begin(), p->grad.end(), 0.0);
    }
    rep.steps_run = step + 1;
  }

  auto final_angles = predict_angles(net, feats);
  auto final_omni = loss::omni_loss(final_angles, tg.angles, tg.omni_w);
  rep.initial_omni = rep.loss_curve.empty() ? final_omni->data[0] : rep.loss_curve.front();
  rep.final_omni = final_omni->data[0];
  rep.final_pd_deg = loss::pd_metric(final_angles, tg.angles, tg.clean_mag);
  rep.final_wopd = loss::wopd_metric(final_angles, tg.angles, tg.clean_mag);
  return rep;
}

}  // namespace phasor::harness

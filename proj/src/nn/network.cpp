// Copyright 2026 the phasor authors
// SPDX-License-Identifier: Apache-2.0

#include "phasor/network.hpp"

#include <cmath>
#include <string>

#include "json.hpp"

namespace phasor::nn {

namespace o = phasor::ops;

ModelConfig ModelConfig::standard_preset() {
  ModelConfig c;
  c.c_mag = 48;
  c.c_pha = 16;
  c.c_mag_head = 12;
  c.c_pha_head = 6;
  c.c_mag_hidden = 96;
  c.c_pha_hidden = 64;
  return c;
}

void ModelConfig::validate() const {
  auto positive = [](int64_t v, const char* name) {
    if (v <= 0) throw ValueError(std::string(name) + " must be positive");
  };
  positive(c_mag, "C_mag");
  positive(c_pha, "C_pha");
  positive(c_mag_head, "C_mag_head");
  positive(c_pha_head, "C_pha_head");
  positive(c_mag_hidden, "C_mag_hidden");
  positive(c_pha_hidden, "C_pha_hidden");
  positive(n_heads, "n_heads");
  positive(n_dual_path, "n_dual_path");
  if (c_mag_hidden % 2 != 0)
    throw ValueError("C_mag_hidden must be even (two GRU directions)");
  if (freq_bins < 5 || freq_bins % 2 == 0)
    throw ValueError("F must be odd and at least 5, got " + std::to_string(freq_bins));
  if (!(alpha > 0.0) || alpha > 1.0)
    throw ValueError("alpha must lie in (0, 1], got " + std::to_string(alpha));
}

std::string ModelConfig::to_json() const {
  nlohmann::ordered_json j;
  j["C_mag"] = c_mag;
  j["C_pha"] = c_pha;
  j["C_mag_head"] = c_mag_head;
  j["C_pha_head"] = c_pha_head;
  j["C_mag_hidden"] = c_mag_hidden;
  j["C_pha_hidden"] = c_pha_hidden;
  j["n_heads"] = n_heads;
  j["n_dual_path"] = n_dual_path;
  j["F"] = freq_bins;
  j["alpha"] = alpha;
  return j.dump(2);
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValueError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValueError("config must be a JSON object");
  ModelConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "C_mag") c.c_mag = value.get<int64_t>();
    else if (key == "C_pha") c.c_pha = value.get<int64_t>();
    else if (key == "C_mag_head") c.c_mag_head = value.get<int64_t>();
    else if (key == "C_pha_head") c.c_pha_head = value.get<int64_t>();
    else if (key == "C_mag_hidden") c.c_mag_hidden = value.get<int64_t>();
    else if (key == "C_pha_hidden") c.c_pha_hidden = value.get<int64_t>();
    else if (key == "n_heads") c.n_heads = value.get<int64_t>();
    else if (key == "n_dual_path") c.n_dual_path = value.get<int64_t>();
    else if (key == "F") c.freq_bins = value.get<int64_t>();
    else if (key == "alpha") c.alpha = value.get<double>();
    else throw ValueError("unknown config key \"" + key + "\"");
  }
  c.validate();
  return c;
}

void Network::collect(ParamMap& out) const {
  expand.collect("expand", out);
  enc_dense.collect("enc_dense", out);
  down.collect("down", out);
  dual.collect("dual", out);
  dec_dense.collect("dec_dense", out);
  up.collect("up", out);
  out.emplace_back("head_mag_w", head_mag_w);
  out.emplace_back("head_mag_b", head_mag_b);
  out.emplace_back("head_pha_w_re", head_pha_w.re);
  out.emplace_back("head_pha_w_im", head_pha_w.im);
}

int64_t Network::param_count() const {
  ParamMap all;
  collect(all);
  int64_t n = 0;
  for (const auto& [name, t] : all) n += t->shape.numel();
  return n;
}

namespace {

TensorPtr uniform_param(Rng& rng, Shape s, double bound) {
  auto t = param(s);
  for (auto& v : t->data) v = rng.uniform(-bound, bound);
  return t;
}

}  // namespace

Network make_network(Rng& rng, const ModelConfig& cfg, BreakFlags breaks) {
  cfg.validate();
  Network net;
  net.cfg = cfg;
  const int64_t f = cfg.freq_bins;
  const int64_t f_low = (f - 1) / 2;  // (1,3) stride-2 conv, no padding

  net.expand = make_mpicm(rng, MpicmMode::kExpandNoGate, 1, 1, cfg.c_mag, cfg.c_pha, f);
  net.enc_dense = make_dense_block(rng, cfg.c_mag, cfg.c_pha, f, breaks.mpicm_gate);
  net.down = make_mpicm(rng, MpicmMode::kDownsample, cfg.c_mag, cfg.c_pha, cfg.c_mag,
                        cfg.c_pha, f_low);
  net.down.break_gate = breaks.mpicm_gate;

  HadfConfig hc;
  hc.c_mag = cfg.c_mag;
  hc.c_pha = cfg.c_pha;
  hc.c_mag_head = cfg.c_mag_head;
  hc.c_pha_head = cfg.c_pha_head;
  hc.c_mag_hidden = cfg.c_mag_hidden;
  hc.c_pha_hidden = cfg.c_pha_hidden;
  hc.n_heads = cfg.n_heads;
  hc.break_attn = breaks.attention;
  hc.break_ffn = breaks.phase_ffn;
  net.dual = make_dual_path(rng, hc, cfg.n_dual_path);

  net.dec_dense = make_dense_block(rng, cfg.c_mag, cfg.c_pha, f_low, breaks.mpicm_gate);
  net.up = make_mpicm(rng, MpicmMode::kUpsample, cfg.c_mag, cfg.c_pha, cfg.c_mag,
                      cfg.c_pha, f);
  net.up.break_gate = breaks.mpicm_gate;

  const double fan_mag = static_cast<double>(cfg.c_mag) * 9.0;
  const double fan_pha = static_cast<double>(cfg.c_pha) * 9.0;
  net.head_mag_w = uniform_param(rng, Shape{1, cfg.c_mag, 3, 3}, std::sqrt(1.0 / fan_mag));
  net.head_mag_b = param(Shape{1});
  net.head_pha_w.re = uniform_param(rng, Shape{1, cfg.c_pha, 3, 3},
                                    std::sqrt(1.0 / (2.0 * fan_pha)));
  net.head_pha_w.im = uniform_param(rng, Shape{1, cfg.c_pha, 3, 3},
                                    std::sqrt(1.0 / (2.0 * fan_pha)));
  return net;
}

SpectrumPair featurize(const CTensor& spec, double alpha) {
  if (spec.re->shape.rank != 2 || spec.re->shape != spec.im->shape)
    throw ShapeError("featurize wants a [T, F] complex spectrum, got " + spec.re->shape.str());
  const int64_t t = spec.re->shape[0], f = spec.re->shape[1];
  SpectrumPair out;
  out.mag = std::make_shared<Tensor>(Shape{1, t, f});
  out.pha.re = std::make_shared<Tensor>(Shape{1, t, f});
  out.pha.im = std::make_shared<Tensor>(Shape{1, t, f});
  const size_t n = spec.re->data.size();
  for (size_t i = 0; i < n; ++i) {
    double re = spec.re->data[i], im = spec.im->data[i];
    double m = std::hypot(re, im);
    out.mag->data[i] = std::pow(m, alpha);
    if (m < 1e-12) {
      out.pha.re->data[i] = 1.0;
      out.pha.im->data[i] = 0.0;
    } else {
      out.pha.re->data[i] = re / m;
      out.pha.im->data[i] = im / m;
    }
  }
  return out;
}

SpectrumPair forward(const Network& net, const SpectrumPair& in, AttentionExport* export_out) {
  return forward(net, in, AttnProbe{export_out, 0, false});
}

SpectrumPair forward(const Network& net, const SpectrumPair& in, const AttnProbe& probe) {
  const Shape& s = in.mag->shape;
  if (s.rank != 3 || in.pha.re->shape != s || in.pha.im->shape != s)
    throw ShapeError("forward wants matched [1, T, F] streams, got " + s.str());
  if (s[0] != 1)
    throw ShapeError("forward handles one utterance at a time, got batch " +
                     std::to_string(s[0]));
  if (s[2] != net.cfg.freq_bins)
    throw ShapeError("forward built for F=" + std::to_string(net.cfg.freq_bins) + ", got " +
                     std::to_string(s[2]));
  const int64_t t = s[1], f = s[2];

  StreamPair x;
  x.mag = o::reshape(in.mag, Shape{1, 1, t, f});
  x.pha = {o::reshape(in.pha.re, Shape{1, 1, t, f}), o::reshape(in.pha.im, Shape{1, 1, t, f})};

  x = mpicm_forward(x, net.expand);
  x = dense_block(x, net.enc_dense);
  x = mpicm_forward(x, net.down);
  x = dual_path(x, net.dual, probe);
  x = dense_block(x, net.dec_dense);
  x = mpicm_forward(x, net.up);

  auto mag = o::relu(o::conv2d(x.mag, net.head_mag_w, net.head_mag_b, o::same_pad(3, 3)));
  auto pha = o::cnormalize(o::cconv2d(x.pha, net.head_pha_w, o::same_pad(3, 3)));

  SpectrumPair out;
  out.mag = o::reshape(mag, Shape{1, t, f});
  out.pha = {o::reshape(pha.re, Shape{1, t, f}), o::reshape(pha.im, Shape{1, t, f})};
  return out;
}

std::vector<double> enhance(const Network& net, const std::vector<double>& wave,
                            const dsp::StftConfig& scfg) {
  if (wave.empty()) throw ValueError("enhance needs a non-empty signal");
  if (scfg.bins() != net.cfg.freq_bins)
    throw ShapeError("stft yields " + std::to_string(scfg.bins()) + " bins but the network wants " +
                     std::to_string(net.cfg.freq_bins));
  auto padded = dsp::pad_to_hop(wave, scfg);
  auto x = std::make_shared<Tensor>(Shape{static_cast<int64_t>(padded.size())});
  x->data = padded;
  auto spec = dsp::stft(x, scfg);

  auto feats = featurize(spec, net.cfg.alpha);
  auto est = forward(net, feats);

  const int64_t t = est.mag->shape[1], f = est.mag->shape[2];
  auto m_full = o::pow_const(o::reshape(est.mag, Shape{t, f}), 1.0 / net.cfg.alpha);
  CTensor unit{o::reshape(est.pha.re, Shape{t, f}), o::reshape(est.pha.im, Shape{t, f})};
  auto y = dsp::istft(o::cmul_real(unit, m_full), scfg);

  std::vector<double> out(wave.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = y->data[i];
  return out;
}

}  // namespace phasor::nn

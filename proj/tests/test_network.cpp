// Copyright 2026 the phasor authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "doctest.h"
#include "grad_check_util.hpp"
#include "phasor/network.hpp"

using namespace phasor;
using namespace phasor::nn;
namespace o = phasor::ops;

namespace {

// Shrunk widths so the full pipeline runs in milliseconds. F=9 keeps the
// stride-2 down/up pair shape-inverse (odd extent).
ModelConfig tiny_cfg() {
  ModelConfig c;
  c.c_mag = 6;
  c.c_pha = 4;
  c.c_mag_head = 3;
  c.c_pha_head = 2;
  c.c_mag_hidden = 4;
  c.c_pha_hidden = 4;
  c.n_heads = 2;
  c.n_dual_path = 1;
  c.freq_bins = 9;
  return c;
}

// Full 201-bin band with skinny channels, for waveform-level tests.
ModelConfig skinny_cfg() {
  ModelConfig c;
  c.c_mag = 4;
  c.c_pha = 2;
  c.c_mag_head = 2;
  c.c_pha_head = 1;
  c.c_mag_hidden = 4;
  c.c_pha_hidden = 2;
  c.n_heads = 1;
  c.n_dual_path = 1;
  return c;
}

// Random compressed-magnitude / unit-phase features, the post-featurize form.
SpectrumPair rand_features(Rng& rng, int64_t t, int64_t f) {
  SpectrumPair s;
  s.mag = testutil::randu(rng, Shape{1, t, f}, 0.5, 2.0);
  s.pha.re = zeros(Shape{1, t, f});
  s.pha.im = zeros(Shape{1, t, f});
  for (size_t i = 0; i < s.pha.re->data.size(); ++i) {
    double phi = rng.uniform(-kPi, kPi);
    s.pha.re->data[i] = std::cos(phi);
    s.pha.im->data[i] = std::sin(phi);
  }
  return s;
}

CTensor rotate(const CTensor& z, double th) {
  double c = std::cos(th), s = std::sin(th);
  CTensor out{zeros(z.re->shape), zeros(z.re->shape)};
  for (size_t i = 0; i < z.re->data.size(); ++i) {
    out.re->data[i] = z.re->data[i] * c - z.im->data[i] * s;
    out.im->data[i] = z.re->data[i] * s + z.im->data[i] * c;
  }
  return out;
}

double aw(double x) { return std::abs(x - kTwoPi * std::round(x / kTwoPi)); }

// Worst circular distance between angle(rot) and angle(base) + th.
double max_angle_residual(const CTensor& rot, const CTensor& base, double th) {
  double worst = 0.0;
  for (size_t i = 0; i < rot.re->data.size(); ++i) {
    double ar = std::atan2(rot.im->data[i], rot.re->data[i]);
    double ab = std::atan2(base.im->data[i], base.re->data[i]);
    worst = std::max(worst, aw(ar - ab - th));
  }
  return worst;
}

double rel_l2_r(const TensorPtr& a, const TensorPtr& b) {
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < a->data.size(); ++i) {
    double d = a->data[i] - b->data[i];
    num += d * d;
    den += b->data[i] * b->data[i];
  }
  return std::sqrt(num) / std::max(1e-12, std::sqrt(den));
}

const double kThetas[] = {0.41, kPi / 2.0, 2.0};

}  // namespace

TEST_CASE("config presets carry the published widths") {
  auto s = ModelConfig::small_preset();
  CHECK(s.c_mag == 32);
  CHECK(s.c_pha == 16);
  CHECK(s.c_mag_head == 8);
  CHECK(s.c_pha_head == 6);
  CHECK(s.c_mag_hidden == 64);
  CHECK(s.c_pha_hidden == 64);
  auto d = ModelConfig::standard_preset();
  CHECK(d.c_mag == 48);
  CHECK(d.c_pha == 16);
  CHECK(d.c_mag_head == 12);
  CHECK(d.c_pha_head == 6);
  CHECK(d.c_mag_hidden == 96);
  CHECK(d.c_pha_hidden == 64);
  for (auto c : {s, d}) {
    CHECK(c.n_heads == 4);
    CHECK(c.n_dual_path == 4);
    CHECK(c.freq_bins == 201);
    CHECK(c.alpha == doctest::Approx(0.3));
  }
}

TEST_CASE("config json round trips and rejects unknown keys") {
  auto d = ModelConfig::standard_preset();
  auto back = ModelConfig::from_json(d.to_json());
  CHECK(back.c_mag == d.c_mag);
  CHECK(back.c_pha == d.c_pha);
  CHECK(back.c_mag_head == d.c_mag_head);
  CHECK(back.c_pha_head == d.c_pha_head);
  CHECK(back.c_mag_hidden == d.c_mag_hidden);
  CHECK(back.c_pha_hidden == d.c_pha_hidden);
  CHECK(back.n_heads == d.n_heads);
  CHECK(back.n_dual_path == d.n_dual_path);
  CHECK(back.freq_bins == d.freq_bins);
  CHECK(back.alpha == d.alpha);

  // Partial documents keep defaults for the rest.
  auto p = ModelConfig::from_json(R"({"C_mag": 24, "alpha": 0.5})");
  CHECK(p.c_mag == 24);
  CHECK(p.alpha == doctest::Approx(0.5));
  CHECK(p.c_pha == 16);
  CHECK(p.freq_bins == 201);

  CHECK_THROWS_AS(ModelConfig::from_json(R"({"C_mag": 4, "bogus": 1})"), ValueError);
  CHECK_THROWS_WITH_AS(ModelConfig::from_json(R"({"hidden": 3})"),
                       doctest::Contains("hidden"), ValueError);
  CHECK_THROWS_AS(ModelConfig::from_json("not json"), ValueError);
  CHECK_THROWS_AS(ModelConfig::from_json("[1,2]"), ValueError);
}

TEST_CASE("config validation rejects out-of-range fields") {
  auto bad = tiny_cfg();
  bad.alpha = 0.0;
  CHECK_THROWS_AS(bad.validate(), ValueError);
  bad = tiny_cfg();
  bad.alpha = 1.5;
  CHECK_THROWS_AS(bad.validate(), ValueError);
  bad = tiny_cfg();
  bad.freq_bins = 10;  // even: down/up pair no longer inverse-shaped
  CHECK_THROWS_AS(bad.validate(), ValueError);
  bad = tiny_cfg();
  bad.freq_bins = 3;
  CHECK_THROWS_AS(bad.validate(), ValueError);
  bad = tiny_cfg();
  bad.c_mag_hidden = 5;  // odd: cannot split across GRU directions
  CHECK_THROWS_AS(bad.validate(), ValueError);
  bad = tiny_cfg();
  bad.c_pha = 0;
  CHECK_THROWS_AS(bad.validate(), ValueError);
  CHECK_NOTHROW(tiny_cfg().validate());
}

TEST_CASE("featurize compresses magnitude and extracts unit phase") {
  CTensor spec{zeros(Shape{1, 2}), zeros(Shape{1, 2})};
  // Cell 0 stays all-zero; cell 1 is 8 * e^{j pi/3}.
  spec.re->data[1] = 8.0 * std::cos(kPi / 3.0);
  spec.im->data[1] = 8.0 * std::sin(kPi / 3.0);
  auto f = featurize(spec, 0.3);
  CHECK(f.mag->shape == Shape{1, 1, 2});
  CHECK(f.pha.re->shape == Shape{1, 1, 2});

  CHECK(f.mag->data[0] == 0.0);
  CHECK(f.pha.re->data[0] == 1.0);  // zero-magnitude convention
  CHECK(f.pha.im->data[0] == 0.0);

  CHECK(f.mag->data[1] == doctest::Approx(1.866065983073615).epsilon(1e-12));
  CHECK(f.pha.re->data[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(f.pha.im->data[1] == doctest::Approx(std::sqrt(3.0) / 2.0).epsilon(1e-12));

  CHECK_THROWS_AS(featurize(CTensor{zeros(Shape{1, 2, 3}), zeros(Shape{1, 2, 3})}, 0.3),
                  ShapeError);
}

TEST_CASE("featurize commutes with input rotation") {
  Rng rng(11);
  CTensor spec{testutil::randn(rng, Shape{3, 5}), testutil::randn(rng, Shape{3, 5})};
  auto base = featurize(spec, 0.3);
  for (double th : kThetas) {
    auto rot = featurize(rotate(spec, th), 0.3);
    CHECK(rel_l2_r(rot.mag, base.mag) <= 1e-14);
    CHECK(max_angle_residual(rot.pha, base.pha, th) <= 1e-12);
  }
}

TEST_CASE("cnormalize yields unit modulus, the zero convention, and exact gradients") {
  Rng rng(12);
  CTensor z{testutil::randn(rng, Shape{3, 4}), testutil::randn(rng, Shape{3, 4})};
  z.re->data[5] = 0.0;
  z.im->data[5] = 0.0;
  auto u = o::cnormalize(z);
  for (size_t i = 0; i < u.re->data.size(); ++i)
    CHECK(std::abs(std::hypot(u.re->data[i], u.im->data[i]) - 1.0) <= 1e-15);
  CHECK(u.re->data[5] == 1.0);
  CHECK(u.im->data[5] == 0.0);

  // FD probe on a fixture bounded away from zero; the origin is a genuine
  // discontinuity and its gradient is pinned to zero by design.
  CTensor g{testutil::randn(rng, Shape{3, 4}), testutil::randn(rng, Shape{3, 4})};
  for (size_t i = 0; i < g.re->data.size(); ++i) {
    if (std::hypot(g.re->data[i], g.im->data[i]) < 0.3) g.re->data[i] += 0.5;
  }
  auto wr = testutil::randn(rng, Shape{3, 4});
  auto wi = testutil::randn(rng, Shape{3, 4});
  auto loss = [&] {
    auto n = o::cnormalize(g);
    auto s = o::add(o::mul(n.re, wr), o::mul(n.im, wi));
    return o::reduce_sum(s, {0, 1}, false);
  };
  CHECK(testutil::max_grad_err(loss, {g.re, g.im}) <= 1e-6);
}

TEST_CASE("forward keeps shapes, a nonnegative magnitude, and unit phase") {
  Rng rng(13);
  auto cfg = tiny_cfg();
  auto net = make_network(rng, cfg);
  auto in = rand_features(rng, 3, cfg.freq_bins);
  auto out = forward(net, in);
  CHECK(out.mag->shape == Shape{1, 3, cfg.freq_bins});
  CHECK(out.pha.re->shape == Shape{1, 3, cfg.freq_bins});
  for (double v : out.mag->data) CHECK(v >= 0.0);
  for (size_t i = 0; i < out.pha.re->data.size(); ++i)
    CHECK(std::abs(std::hypot(out.pha.re->data[i], out.pha.im->data[i]) - 1.0) <= 1e-12);
}

TEST_CASE("forward rejects malformed inputs") {
  Rng rng(14);
  auto cfg = tiny_cfg();
  auto net = make_network(rng, cfg);
  auto good = rand_features(rng, 2, cfg.freq_bins);
  SpectrumPair bad_f = rand_features(rng, 2, cfg.freq_bins + 2);
  CHECK_THROWS_AS(forward(net, bad_f), ShapeError);
  SpectrumPair bad_b;
  bad_b.mag = testutil::randu(rng, Shape{2, 2, cfg.freq_bins}, 0.5, 1.0);
  bad_b.pha.re = zeros(Shape{2, 2, cfg.freq_bins});
  bad_b.pha.im = zeros(Shape{2, 2, cfg.freq_bins});
  CHECK_THROWS_AS(forward(net, bad_b), ShapeError);
  SpectrumPair ragged = good;
  ragged.pha.re = zeros(Shape{1, 3, cfg.freq_bins});
  ragged.pha.im = zeros(Shape{1, 3, cfg.freq_bins});
  CHECK_THROWS_AS(forward(net, ragged), ShapeError);
  CHECK_NOTHROW(forward(net, good));
}

TEST_CASE("forward is deterministic bit for bit") {
  Rng rng(15);
  auto cfg = tiny_cfg();
  auto net = make_network(rng, cfg);
  auto in = rand_features(rng, 3, cfg.freq_bins);
  auto a = forward(net, in);
  auto b = forward(net, in);
  CHECK(a.mag->data == b.mag->data);
  CHECK(a.pha.re->data == b.pha.re->data);
  CHECK(a.pha.im->data == b.pha.im->data);
}

TEST_CASE("end-to-end rotation equivariance of the full network") {
  Rng rng(16);
  auto cfg = tiny_cfg();
  auto net = make_network(rng, cfg);
  auto in = rand_features(rng, 4, cfg.freq_bins);
  auto base = forward(net, in);
  for (double th : kThetas) {
    SpectrumPair rot{in.mag, rotate(in.pha, th)};
    auto got = forward(net, rot);
    CHECK(rel_l2_r(got.mag, base.mag) <= 1e-10);
    CHECK(max_angle_residual(got.pha, base.pha, th) <= 1e-6);
  }
}

TEST_CASE("each break flag defeats end-to-end equivariance") {
  auto cfg = tiny_cfg();
  const double th = 2.0;
  for (int which = 0; which < 3; ++which) {
    BreakFlags flags;
    if (which == 0) flags.mpicm_gate = true;
    if (which == 1) flags.attention = true;
    if (which == 2) flags.phase_ffn = true;
    Rng rng(17);
    auto net = make_network(rng, cfg, flags);
    Rng drng(18);
    auto in = rand_features(drng, 4, cfg.freq_bins);
    auto base = forward(net, in);
    SpectrumPair rot{in.mag, rotate(in.pha, th)};
    auto got = forward(net, rot);
    double dev = max_angle_residual(got.pha, base.pha, th);
    INFO("break mode ", which, " residual ", dev);
    CHECK(dev >= 1e-3);
  }
}

TEST_CASE("forward threads the attention export through the bottleneck") {
  Rng rng(19);
  auto cfg = tiny_cfg();
  auto net = make_network(rng, cfg);
  auto in = rand_features(rng, 3, cfg.freq_bins);
  AttentionExport exp;
  forward(net, in, &exp);
  CHECK(exp.heads == cfg.n_heads);
  CHECK(exp.len == 3);  // first time-axis block: sequences over T
  for (int64_t h = 0; h < exp.heads; ++h)
    for (int64_t r = 0; r < exp.len; ++r) {
      double row = 0.0;
      for (int64_t c = 0; c < exp.len; ++c) row += exp.at(exp.score, h, r, c);
      CHECK(row == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("parameter counts match the frozen ledger") {
  Rng rng(20);
  auto small = make_network(rng, ModelConfig::small_preset());
  auto full = make_network(rng, ModelConfig::standard_preset());
  // Hand-tallied from the layer shapes; complex tensors count re and im.
  CHECK(small.param_count() == 724177);
  CHECK(full.param_count() == 1179313);
  CHECK(small.param_count() < full.param_count());
  // Published footprint: about 1.55M, generous band.
  CHECK(full.param_count() >= 1162500);
  CHECK(full.param_count() <= 1937500);
}

TEST_CASE("collect names are unique and cover every tensor") {
  Rng rng(21);
  auto net = make_network(rng, tiny_cfg());
  ParamMap pm;
  net.collect(pm);
  CHECK(pm.size() > 0);
  for (size_t i = 0; i < pm.size(); ++i) {
    CHECK(pm[i].second != nullptr);
    for (size_t j = i + 1; j < pm.size(); ++j) CHECK(pm[i].first != pm[j].first);
  }
}

TEST_CASE("enhance round trips through analysis when the net is an identity") {
  // With forward replaced by the identity, enhance reduces to
  // stft -> compress -> decompress -> istft, which must be transparent.
  dsp::StftConfig scfg;
  Rng rng(22);
  std::vector<double> wave(1280);
  for (auto& v : wave) v = 0.4 * rng.normal();
  auto padded = dsp::pad_to_hop(wave, scfg);
  auto x = zeros(Shape{static_cast<int64_t>(padded.size())});
  x->data = padded;
  auto spec = dsp::stft(x, scfg);
  auto f = featurize(spec, 0.3);
  const int64_t t = f.mag->shape[1], fb = f.mag->shape[2];
  auto m = o::pow_const(o::reshape(f.mag, Shape{t, fb}), 1.0 / 0.3);
  CTensor unit{o::reshape(f.pha.re, Shape{t, fb}), o::reshape(f.pha.im, Shape{t, fb})};
  auto y = dsp::istft(o::cmul_real(unit, m), scfg);
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < wave.size(); ++i) {
    double d = y->data[i] - wave[i];
    num += d * d;
    den += wave[i] * wave[i];
  }
  double snr_db = 10.0 * std::log10(den / std::max(num, 1e-300));
  CHECK(snr_db >= 100.0);
}

TEST_CASE("enhance returns a finite signal of the input length") {
  Rng rng(23);
  auto net = make_network(rng, skinny_cfg());
  dsp::StftConfig scfg;
  std::vector<double> wave(641);
  for (auto& v : wave) v = 0.3 * rng.normal();
  auto out = enhance(net, wave, scfg);
  CHECK(out.size() == wave.size());
  for (double v : out) CHECK(std::isfinite(v));

  CHECK_THROWS_AS(enhance(net, {}, scfg), ValueError);
  Rng rng2(24);
  auto mismatched = make_network(rng2, tiny_cfg());
  CHECK_THROWS_AS(enhance(mismatched, wave, scfg), ShapeError);
}

TEST_CASE("checkpoints restore the exact parameters and outputs") {
  Rng rng(25);
  auto cfg = tiny_cfg();
  auto net = make_network(rng, cfg);
  const std::string path = "test_network_ckpt.phsr";
  save_network(path, net);
  auto back = load_network(path);

  CHECK(back.cfg.c_mag == cfg.c_mag);
  CHECK(back.cfg.freq_bins == cfg.freq_bins);
  ParamMap a, b;
  net.collect(a);
  back.collect(b);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].first == b[i].first);
    CHECK(a[i].second->data == b[i].second->data);
  }

  Rng drng(26);
  auto in = rand_features(drng, 2, cfg.freq_bins);
  auto out_a = forward(net, in);
  auto out_b = forward(back, in);
  CHECK(out_a.mag->data == out_b.mag->data);
  CHECK(out_a.pha.re->data == out_b.pha.re->data);
  std::remove(path.c_str());
}

TEST_CASE("checkpoint loading rejects foreign and damaged files") {
  Rng rng(27);
  auto net = make_network(rng, tiny_cfg());
  const std::string path = "test_network_damage.phsr";
  save_network(path, net);

  {
    std::FILE* fp = std::fopen(path.c_str(), "r+b");
    REQUIRE(fp != nullptr);
    std::fputc('X', fp);
    std::fclose(fp);
  }
  CHECK_THROWS_WITH_AS(load_network(path), doctest::Contains("checkpoint"), ValueError);

  save_network(path, net);
  {
    // Truncate mid-stream: keep the header plus a little.
    std::FILE* fp = std::fopen(path.c_str(), "rb");
    REQUIRE(fp != nullptr);
    std::vector<char> head(256);
    size_t got = std::fread(head.data(), 1, head.size(), fp);
    std::fclose(fp);
    fp = std::fopen(path.c_str(), "wb");
    std::fwrite(head.data(), 1, got, fp);
    std::fclose(fp);
  }
  CHECK_THROWS_AS(load_network(path), ValueError);
  CHECK_THROWS_AS(load_network("no_such_file.phsr"), ValueError);
  std::remove(path.c_str());
}

// Copyright 2026 the phasor authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "grad_check_util.hpp"
#include "phasor/ops.hpp"
#include "phasor/signal.hpp"

using namespace phasor;
using namespace phasor::dsp;

namespace {

std::vector<double> sine(double freq_hz, int fs, int64_t n, double amp = 0.5) {
  std::vector<double> x(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i)
    x[static_cast<size_t>(i)] = amp * std::sin(kTwoPi * freq_hz * static_cast<double>(i) / fs);
  return x;
}

double snr_db_of(const std::vector<double>& ref, const std::vector<double>& est) {
  REQUIRE(ref.size() == est.size());
  double ps = 0.0, pe = 0.0;
  for (size_t i = 0; i < ref.size(); ++i) {
    ps += ref[i] * ref[i];
    double d = ref[i] - est[i];
    pe += d * d;
  }
  if (pe == 0.0) return 1e9;
  return 10.0 * std::log10(ps / pe);
}

// Energy in bins [lo, hi] summed over all frames.
double band_energy(const std::vector<double>& x, int64_t lo, int64_t hi) {
  StftConfig cfg;
  auto spec = stft(from_data(Shape{static_cast<int64_t>(x.size())}, x), cfg);
  double e = 0.0;
  int64_t frames = spec.re->shape[0], bins = spec.re->shape[1];
  for (int64_t t = 0; t < frames; ++t)
    for (int64_t k = lo; k <= hi && k < bins; ++k)
      e += spec.re->cat(t, k) * spec.re->cat(t, k) + spec.im->cat(t, k) * spec.im->cat(t, k);
  return e;
}

void put_u32(std::vector<unsigned char>& b, uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}
void put_u16(std::vector<unsigned char>& b, uint16_t v) {
  b.push_back(static_cast<unsigned char>(v & 0xff));
  b.push_back(static_cast<unsigned char>(v >> 8));
}

// Hand-rolled RIFF writer so the reader is checked against independent bytes.
std::string fake_wav(const char* name, uint16_t fmt, uint16_t channels, uint16_t bits,
                     uint32_t rate, const std::vector<int16_t>& samples) {
  std::vector<unsigned char> b;
  uint32_t data_bytes = static_cast<uint32_t>(samples.size() * 2);
  b.push_back('R'); b.push_back('I'); b.push_back('F'); b.push_back('F');
  put_u32(b, 36 + data_bytes);
  b.push_back('W'); b.push_back('A'); b.push_back('V'); b.push_back('E');
  b.push_back('f'); b.push_back('m'); b.push_back('t'); b.push_back(' ');
  put_u32(b, 16);
  put_u16(b, fmt);
  put_u16(b, channels);
  put_u32(b, rate);
  put_u32(b, rate * channels * bits / 8);
  put_u16(b, static_cast<uint16_t>(channels * bits / 8));
  put_u16(b, bits);
  b.push_back('d'); b.push_back('a'); b.push_back('t'); b.push_back('a');
  put_u32(b, data_bytes);
  for (int16_t s : samples) put_u16(b, static_cast<uint16_t>(s));
  std::string path = std::string("/tmp/") + name;
  std::ofstream f(path, std::ios::binary);
  f.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  return path;
}

}  // namespace

TEST_CASE("sqrt-hann window matches closed form and overlap-adds to a constant") {
  auto w = sqrt_hann(400);
  REQUIRE(w.size() == 400);
  for (int64_t n = 0; n < 400; ++n) {
    double hann = 0.5 * (1.0 - std::cos(kTwoPi * static_cast<double>(n) / 400.0));
    CHECK(std::abs(w[static_cast<size_t>(n)] * w[static_cast<size_t>(n)] - hann) < 1e-12);
  }
  for (int64_t n = 0; n < 100; ++n) {
    double s = 0.0;
    for (int64_t k = 0; k < 4; ++k) {
      double v = w[static_cast<size_t>(n + 100 * k)];
      s += v * v;
    }
    CHECK(std::abs(s - 2.0) < 1e-12);
  }
}

TEST_CASE("1 kHz sine concentrates in the 40 Hz-spaced bin 25") {
  auto x = sine(1000.0, 16000, 1600);
  StftConfig cfg;
  auto spec = stft(from_data(Shape{1600}, x), cfg);
  REQUIRE(spec.re->shape[0] == 17);
  REQUIRE(spec.re->shape[1] == 201);
  int64_t t = 8;  // interior frame, no padding influence
  int64_t best = 0;
  double best_e = -1.0;
  for (int64_t k = 0; k < 201; ++k) {
    double e = spec.re->cat(t, k) * spec.re->cat(t, k) + spec.im->cat(t, k) * spec.im->cat(t, k);
    if (e > best_e) { best_e = e; best = k; }
  }
  CHECK(best == 25);
}

TEST_CASE("stft/istft round trip reconstructs white noise above 100 dB SNR") {
  Rng rng(2026);
  std::vector<double> x(1600);
  for (auto& v : x) v = rng.normal();
  StftConfig cfg;
  auto spec = stft(from_data(Shape{1600}, x), cfg);
  auto y = istft(spec, cfg);
  REQUIRE(y->numel() == 1600);
  std::vector<double> yv(y->data.begin(), y->data.end());
  CHECK(snr_db_of(x, yv) >= 100.0);
}

TEST_CASE("stft length contract: frames = n/hop + 1, rejects ragged input") {
  StftConfig cfg;
  auto spec = stft(from_data(Shape{300}, std::vector<double>(300, 0.25)), cfg);
  CHECK(spec.re->shape[0] == 4);
  CHECK_THROWS_AS(stft(from_data(Shape{301}, std::vector<double>(301, 0.0)), cfg), ValueError);
}

TEST_CASE("windowed frame energy equals Hermitian-weighted spectral energy") {
  Rng rng(5);
  std::vector<double> x(400);
  for (auto& v : x) v = rng.uniform(-1.0, 1.0);
  StftConfig cfg;
  auto spec = stft(from_data(Shape{400}, x), cfg);
  auto w = sqrt_hann(400);

  double time_e = 0.0;
  for (int64_t t = 0; t < 5; ++t) {
    for (int64_t n = 0; n < 400; ++n) {
      int64_t idx = t * 100 + n;  // index into the half-window padded signal
      double v = (idx >= 200 && idx < 600) ? x[static_cast<size_t>(idx - 200)] : 0.0;
      double fw = v * w[static_cast<size_t>(n)];
      time_e += fw * fw;
    }
  }
  double spec_e = 0.0;
  for (int64_t t = 0; t < 5; ++t) {
    for (int64_t k = 0; k <= 200; ++k) {
      double wk = (k == 0 || k == 200) ? 1.0 : 2.0;
      spec_e += wk * (spec.re->cat(t, k) * spec.re->cat(t, k) +
                      spec.im->cat(t, k) * spec.im->cat(t, k));
    }
  }
  spec_e /= 400.0;
  CHECK(std::abs(time_e - spec_e) <= 1e-8 * std::max(1.0, std::abs(time_e)));
}

TEST_CASE("stft spectral energy gradient matches finite differences") {
  Rng rng(11);
  auto x = testutil::randn(rng, Shape{200});
  StftConfig cfg;
  auto loss = [&]() {
    auto sp = stft(x, cfg);
    auto e = ops::add(ops::mul(sp.re, sp.re), ops::mul(sp.im, sp.im));
    return ops::mean_all(e);
  };
  CHECK(testutil::max_grad_err(loss, {x}) < 1e-4);
}

TEST_CASE("istft gradient matches finite differences") {
  Rng rng(12);
  auto re = testutil::randn(rng, Shape{2, 201});
  auto im = testutil::randn(rng, Shape{2, 201});
  StftConfig cfg;
  auto loss = [&]() {
    CTensor sp{re, im};
    auto y = istft(sp, cfg);
    return ops::mean_all(ops::mul(y, y));
  };
  CHECK(testutil::max_grad_err(loss, {re, im}) < 1e-4);
}

TEST_CASE("pad_to_hop pads up to the next hop boundary") {
  StftConfig cfg;
  auto a = pad_to_hop({}, cfg);
  CHECK(a.size() == 100);
  std::vector<double> b(250, 1.5);
  auto pb = pad_to_hop(b, cfg);
  REQUIRE(pb.size() == 300);
  CHECK(pb[249] == 1.5);
  CHECK(pb[250] == 0.0);
  std::vector<double> c(300, 2.0);
  CHECK(pad_to_hop(c, cfg).size() == 300);
}

TEST_CASE("wav round trip is exact for quantized samples") {
  std::vector<double> s(777);
  Rng rng(3);
  for (auto& v : s) v = static_cast<double>(static_cast<int64_t>(rng.below(65536)) - 32768) / 32768.0;
  write_wav("/tmp/phasor_rt.wav", s, 16000);
  auto back = read_wav("/tmp/phasor_rt.wav");
  CHECK(back.sample_rate == 16000);
  REQUIRE(back.samples.size() == s.size());
  for (size_t i = 0; i < s.size(); ++i) REQUIRE(back.samples[i] == s[i]);
  std::remove("/tmp/phasor_rt.wav");
}

TEST_CASE("wav reader names the offending field on unsupported files") {
  std::vector<int16_t> pcm{0, 1000, -1000, 32767};
  auto ok = fake_wav("phasor_ok.wav", 1, 1, 16, 8000, pcm);
  auto got = read_wav(ok);
  CHECK(got.sample_rate == 8000);
  REQUIRE(got.samples.size() == 4);
  CHECK(got.samples[3] == doctest::Approx(32767.0 / 32768.0));

  auto stereo = fake_wav("phasor_st.wav", 1, 2, 16, 16000, pcm);
  CHECK_THROWS_WITH_AS(read_wav(stereo), doctest::Contains("channel"), ValueError);
  auto fl = fake_wav("phasor_f32.wav", 3, 1, 16, 16000, pcm);
  CHECK_THROWS_WITH_AS(read_wav(fl), doctest::Contains("format"), ValueError);
  auto eight = fake_wav("phasor_u8.wav", 1, 1, 8, 16000, pcm);
  CHECK_THROWS_WITH_AS(read_wav(eight), doctest::Contains("bit"), ValueError);
  for (auto p : {ok, stereo, fl, eight}) std::remove(p.c_str());
}

TEST_CASE("add_noise hits the requested SNR to float precision") {
  auto clean = sine(440.0, 16000, 1600);
  Rng rng(7);
  std::vector<double> noise(1600);
  for (auto& v : noise) v = rng.normal();
  for (double snr : {-5.0, 0.0, 7.5, 30.0}) {
    auto out = add_noise(clean, noise, snr);
    std::vector<double> added(1600);
    for (size_t i = 0; i < added.size(); ++i) added[i] = out[i] - clean[i];
    CHECK(std::abs(snr_db_of(clean, out) - snr) < 1e-9);
    (void)added;
  }
  CHECK_THROWS_AS(add_noise(std::vector<double>(16, 0.0), noise, 0.0), ValueError);
  CHECK_THROWS_AS(add_noise(clean, std::vector<double>(3, 1.0), 0.0), ValueError);
}

TEST_CASE("rir convolution: identity and pure delay") {
  auto x = sine(250.0, 16000, 320);
  auto y = convolve_rir(x, {1.0});
  for (size_t i = 0; i < x.size(); ++i) REQUIRE(y[i] == x[i]);
  auto d = convolve_rir(x, {0.0, 1.0});
  CHECK(d[0] == 0.0);
  for (size_t i = 1; i < x.size(); ++i) REQUIRE(d[i] == x[i - 1]);
}

TEST_CASE("synthetic rir has a unit direct tap and a decaying tail") {
  Rng rng(99);
  auto h = make_rir(rng, 16000, 0.3, 0.05);
  REQUIRE(h.size() == 800);
  CHECK(h[0] == 1.0);
  auto rms = [&](size_t lo, size_t hi) {
    double s = 0.0;
    for (size_t i = lo; i < hi; ++i) s += h[i] * h[i];
    return std::sqrt(s / static_cast<double>(hi - lo));
  };
  CHECK(rms(600, 800) < rms(1, 201));
  Rng rng2(99);
  auto h2 = make_rir(rng2, 16000, 0.3, 0.05);
  for (size_t i = 0; i < h.size(); ++i) REQUIRE(h[i] == h2[i]);
}

TEST_CASE("bandwidth limiter kills content above 4.2 kHz by 40 dB, keeps the passband") {
  Rng rng(17);
  std::vector<double> x(16000);
  for (auto& v : x) v = rng.normal();
  auto y = bandwidth_limit(x, 4000.0, 16000);
  REQUIRE(y.size() == x.size());
  double hi_in = band_energy(x, 106, 200);   // > 4.2 kHz at 40 Hz per bin
  double hi_out = band_energy(y, 106, 200);
  CHECK(10.0 * std::log10(hi_out / hi_in) <= -40.0);
  double lo_in = band_energy(x, 0, 90);      // <= 3.6 kHz
  double lo_out = band_energy(y, 0, 90);
  CHECK(std::abs(10.0 * std::log10(lo_out / lo_in)) < 1.0);
}

TEST_CASE("degrade dispatcher validates kinds and mixes at exact SNR") {
  auto clean = sine(500.0, 16000, 1600);
  Rng rng(1);
  DegradeSpec bad;
  bad.kind = "XX";
  CHECK_THROWS_AS(degrade(clean, bad, rng), ValueError);
  DegradeSpec dr;
  dr.kind = "DR";
  CHECK_THROWS_AS(degrade(clean, dr, rng), ValueError);  // rir missing

  DegradeSpec dn;
  dn.kind = "DN";
  dn.snr_db = 12.0;
  auto noisy = degrade(clean, dn, rng);
  CHECK(std::abs(snr_db_of(clean, noisy) - 12.0) < 1e-9);

  DegradeSpec all;
  all.kind = "DN+DR+BWE";
  all.snr_db = 20.0;
  all.cutoff_hz = 4000.0;
  all.rir = {1.0, 0.0, 0.2};
  auto worst = degrade(clean, all, rng);
  REQUIRE(worst.size() == clean.size());
  CHECK(snr_db_of(clean, worst) < 30.0);  // actually degraded
}

TEST_CASE("griffin-lim starts at zero phase and never increases the residual") {
  Rng rng(4);
  std::vector<double> x(800);
  auto s1 = sine(700.0, 16000, 800), s2 = sine(1900.0, 16000, 800, 0.3);
  for (size_t i = 0; i < x.size(); ++i) x[i] = s1[i] + s2[i] + 0.05 * rng.normal();
  StftConfig cfg;
  auto spec = stft(from_data(Shape{800}, x), cfg);
  auto mag = ops::cmodulus(spec);

  auto zero = griffin_lim(mag, cfg, 0);
  for (int64_t i = 0; i < mag->numel(); ++i) {
    REQUIRE(zero.re->data[static_cast<size_t>(i)] == mag->data[static_cast<size_t>(i)]);
    REQUIRE(zero.im->data[static_cast<size_t>(i)] == 0.0);
  }

  auto residual = [&](const CTensor& est) {
    auto back = stft(istft(est, cfg), cfg);
    double d = 0.0;
    for (int64_t i = 0; i < mag->numel(); ++i) {
      double dr = back.re->data[static_cast<size_t>(i)] - est.re->data[static_cast<size_t>(i)];
      double di = back.im->data[static_cast<size_t>(i)] - est.im->data[static_cast<size_t>(i)];
      d += dr * dr + di * di;
    }
    return std::sqrt(d);
  };
  double prev = residual(zero);
  for (int it = 2; it <= 10; it += 2) {
    double cur = residual(griffin_lim(mag, cfg, it));
    CHECK(cur <= prev + 1e-10);
    prev = cur;
  }
}

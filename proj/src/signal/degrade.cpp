// Copyright 2026 the phasor authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "phasor/signal.hpp"

namespace phasor::dsp {

namespace {

double bessel_i0(double x) {
  double sum = 1.0, term = 1.0;
  const double q = x * x / 4.0;
  for (int k = 1; k < 64; ++k) {
    term *= q / (static_cast<double>(k) * static_cast<double>(k));
    sum += term;
    if (term < 1e-18 * sum) break;
  }
  return sum;
}

double sinc(double x) {
  if (x == 0.0) return 1.0;
  double px = kPi * x;
  return std::sin(px) / px;
}

/// Kaiser windowed-sinc lowpass, 60 dB stopband, transition band of width
/// 0.1*cutoff centred on the cutoff, unit DC gain, odd tap count.
std::vector<double> design_lowpass(double cutoff_hz, int fs) {
  const double atten = 60.0;
  const double dw = kTwoPi * (0.1 * cutoff_hz) / static_cast<double>(fs);
  int order = static_cast<int>(std::ceil((atten - 7.95) / (2.285 * dw)));
  if (order % 2) ++order;
  const int m = order / 2;
  const double beta = 0.1102 * (atten - 8.7);
  const double fc = cutoff_hz / static_cast<double>(fs);
  std::vector<double> h(static_cast<size_t>(order + 1));
  const double denom = bessel_i0(beta);
  double dc = 0.0;
  for (int i = 0; i <= order; ++i) {
    double t = static_cast<double>(i - m) / static_cast<double>(m);
    double w = bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - t * t))) / denom;
    h[static_cast<size_t>(i)] = 2.0 * fc * sinc(2.0 * fc * static_cast<double>(i - m)) * w;
    dc += h[static_cast<size_t>(i)];
  }
  for (auto& v : h) v /= dc;
  return h;
}

/// Zero-delay FIR application: y[n] = sum_k h[k] x[n+k-m], zero-padded edges.
std::vector<double> filter_centered(const std::vector<double>& x, const std::vector<double>& h) {
  const int64_t n = static_cast<int64_t>(x.size());
  const int64_t taps = static_cast<int64_t>(h.size());
  const int64_t m = (taps - 1) / 2;
  std::vector<double> y(x.size(), 0.0);
  for (int64_t i = 0; i < n; ++i) {
    double acc = 0.0;
    int64_t k0 = std::max<int64_t>(0, m - i);
    int64_t k1 = std::min<int64_t>(taps, n + m - i);
    for (int64_t k = k0; k < k1; ++k)
      acc += h[static_cast<size_t>(k)] * x[static_cast<size_t>(i + k - m)];
    y[static_cast<size_t>(i)] = acc;
  }
  return y;
}

}  // namespace

std::vector<double> add_noise(const std::vector<double>& clean,
                              const std::vector<double>& noise, double snr_db) {
  if (clean.size() != noise.size()) throw ValueError("add_noise length mismatch");
  double pc = 0.0, pn = 0.0;
  for (double v : clean) pc += v * v;
  for (double v : noise) pn += v * v;
  if (pc == 0.0) throw ValueError("add_noise: silent clean signal has no defined SNR");
  if (pn == 0.0) throw ValueError("add_noise: silent noise source");
  const double target = pc / std::pow(10.0, snr_db / 10.0);
  const double g = std::sqrt(target / pn);
  std::vector<double> out(clean.size());
  for (size_t i = 0; i < clean.size(); ++i) out[i] = clean[i] + g * noise[i];
  return out;
}

std::vector<double> convolve_rir(const std::vector<double>& x, const std::vector<double>& rir) {
  if (rir.empty()) throw ValueError("convolve_rir: empty impulse response");
  std::vector<double> y(x.size(), 0.0);
  const int64_t n = static_cast<int64_t>(x.size()), m = static_cast<int64_t>(rir.size());
  for (int64_t i = 0; i < n; ++i) {
    double acc = 0.0;
    int64_t kmax = std::min<int64_t>(m, i + 1);
    for (int64_t k = 0; k < kmax; ++k)
      acc += rir[static_cast<size_t>(k)] * x[static_cast<size_t>(i - k)];
    y[static_cast<size_t>(i)] = acc;
  }
  return y;
}

std::vector<double> make_rir(Rng& rng, int sample_rate, double t60_s, double len_s) {
  if (t60_s <= 0.0 || len_s <= 0.0) throw ValueError("make_rir: non-positive duration");
  const int64_t n = static_cast<int64_t>(std::llround(len_s * sample_rate));
  std::vector<double> h(static_cast<size_t>(std::max<int64_t>(n, 1)), 0.0);
  h[0] = 1.0;
  const double decay = 3.0 / (static_cast<double>(sample_rate) * t60_s);
  for (size_t i = 1; i < h.size(); ++i)
    h[i] = 0.3 * rng.normal() * std::pow(10.0, -decay * static_cast<double>(i));
  return h;
}

std::vector<double> bandwidth_limit(const std::vector<double>& x, double cutoff_hz,
                                    int sample_rate) {
  if (cutoff_hz <= 0.0 || 2.0 * cutoff_hz >= static_cast<double>(sample_rate))
    throw ValueError("bandwidth_limit: cutoff must sit below Nyquist");
  const int factor =
      static_cast<int>(std::llround(static_cast<double>(sample_rate) / (2.0 * cutoff_hz)));
  if (factor < 2) return x;  // nothing to remove
  auto lp = design_lowpass(cutoff_hz, sample_rate);
  auto anti = filter_centered(x, lp);
  std::vector<double> stuffed(x.size(), 0.0);
  for (size_t i = 0; i < x.size(); i += static_cast<size_t>(factor)) stuffed[i] = anti[i];
  auto out = filter_centered(stuffed, lp);
  for (auto& v : out) v *= static_cast<double>(factor);
  return out;
}

std::vector<double> degrade(const std::vector<double>& clean, const DegradeSpec& spec,
                            Rng& rng) {
  const bool dn = spec.kind == "DN" || spec.kind == "DN+DR" || spec.kind == "DN+DR+BWE";
  const bool dr = spec.kind == "DR" || spec.kind == "DN+DR" || spec.kind == "DN+DR+BWE";
  const bool bwe = spec.kind == "BWE" || spec.kind == "DN+DR+BWE";
  if (!dn && !dr && !bwe)
    throw ValueError("degrade: unknown kind '" + spec.kind +
                     "' (want DN, DR, BWE, DN+DR, DN+DR+BWE)");
  std::vector<double> y = clean;
  if (dr) {
    if (spec.rir.empty()) throw ValueError("degrade: kind " + spec.kind + " needs an rir");
    y = convolve_rir(y, spec.rir);
  }
  if (dn) {
    std::vector<double> noise(y.size());
    for (auto& v : noise) v = rng.normal();
    y = add_noise(y, noise, spec.snr_db);
  }
  if (bwe) y = bandwidth_limit(y, spec.cutoff_hz, 16000);
  return y;
}

}  // namespace phasor::dsp

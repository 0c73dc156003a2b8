// Copyright 2026 the phasor authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "phasor/signal.hpp"

namespace phasor::dsp {

using namespace phasor::ops;

std::vector<double> sqrt_hann(int64_t n) {
  std::vector<double> w(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i)
    w[static_cast<size_t>(i)] =
        std::sqrt(0.5 * (1.0 - std::cos(kTwoPi * static_cast<double>(i) / static_cast<double>(n))));
  return w;
}

namespace {

// Forward DFT as [win, F] matrices: X = (w*frame) * C + j * (w*frame) * S.
void dft_matrices(const StftConfig& cfg, TensorPtr& c, TensorPtr& s) {
  const int64_t n = cfg.fft_size, f = cfg.bins();
  c = zeros({n, f});
  s = zeros({n, f});
  for (int64_t i = 0; i < n; ++i)
    for (int64_t k = 0; k < f; ++k) {
      double a = kTwoPi * static_cast<double>(i * k) / static_cast<double>(n);
      c->at(i, k) = std::cos(a);
      s->at(i, k) = -std::sin(a);
    }
}

// Inverse real DFT as [F, win] matrices with Hermitian weights folded in.
void idft_matrices(const StftConfig& cfg, TensorPtr& ci, TensorPtr& si) {
  const int64_t n = cfg.fft_size, f = cfg.bins();
  ci = zeros({f, n});
  si = zeros({f, n});
  for (int64_t k = 0; k < f; ++k) {
    // interior bins count twice (conjugate pair), DC and Nyquist once
    const double wk = (k == 0 || 2 * k == n) ? 1.0 : 2.0;
    for (int64_t i = 0; i < n; ++i) {
      double a = kTwoPi * static_cast<double>(k * i) / static_cast<double>(n);
      ci->at(k, i) = wk * std::cos(a) / static_cast<double>(n);
      si->at(k, i) = -wk * std::sin(a) / static_cast<double>(n);
    }
  }
}

}  // namespace

CTensor stft(const TensorPtr& x, const StftConfig& cfg) {
  if (x->shape.rank != 1) throw ShapeError("stft wants a rank-1 signal, got " + x->shape.str());
  const int64_t n = x->shape[0];
  if (n <= 0) throw ValueError("stft on empty signal");
  if (n % cfg.hop != 0)
    throw ValueError("stft signal length " + std::to_string(n) + " is not a multiple of hop " +
                     std::to_string(cfg.hop) + "; pad_to_hop first");
  const int64_t half = cfg.win_len / 2;
  auto padded = concat_dim({zeros({half}), x, zeros({half})}, 0);
  auto frames = frame_signal(padded, cfg.win_len, cfg.hop);
  auto window = from_data({cfg.win_len}, sqrt_hann(cfg.win_len));
  auto fw = mul(frames, window);
  TensorPtr c, s;
  dft_matrices(cfg, c, s);
  return {matmul(fw, c), matmul(fw, s)};
}

TensorPtr istft(const CTensor& spec, const StftConfig& cfg) {
  if (spec.re->shape.rank != 2 || spec.re->shape[1] != cfg.bins())
    throw ShapeError("istft wants [T," + std::to_string(cfg.bins()) + "], got " +
                     spec.re->shape.str());
  const int64_t t = spec.re->shape[0];
  const int64_t padded_len = (t - 1) * cfg.hop + cfg.win_len;
  const int64_t half = cfg.win_len / 2;
  const int64_t out_len = (t - 1) * cfg.hop;
  if (out_len <= 0) throw ValueError("istft needs at least 2 frames");

  TensorPtr ci, si;
  idft_matrices(cfg, ci, si);
  auto frames = add(matmul(spec.re, ci), matmul(spec.im, si));  // = w_a * original frames
  auto window = from_data({cfg.win_len}, sqrt_hann(cfg.win_len));
  auto synth = mul(frames, window);
  auto ola = overlap_add(synth, cfg.hop, padded_len);

  // analysis+synthesis window envelope; strictly positive on the kept span
  auto w = sqrt_hann(cfg.win_len);
  auto env = zeros({padded_len});
  for (int64_t fi = 0; fi < t; ++fi)
    for (int64_t i = 0; i < cfg.win_len; ++i)
      env->at(fi * cfg.hop + i) += w[static_cast<size_t>(i)] * w[static_cast<size_t>(i)];
  for (auto& v : env->data) v = std::max(v, 1e-12);

  return slice_dim(div(ola, env), 0, half, out_len);
}

std::vector<double> pad_to_hop(const std::vector<double>& x, const StftConfig& cfg) {
  std::vector<double> out = x;
  const size_t hop = static_cast<size_t>(cfg.hop);
  if (out.empty()) {
    out.assign(hop, 0.0);
    return out;
  }
  out.resize(out.size() + (hop - out.size() % hop) % hop, 0.0);
  return out;
}

}  // namespace phasor::dsp

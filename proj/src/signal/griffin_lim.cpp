// Copyright 2026 the phasor authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "phasor/signal.hpp"

namespace phasor::dsp {

CTensor griffin_lim(const TensorPtr& mag, const StftConfig& cfg, int iters) {
  if (mag->shape.rank != 2 || mag->shape[1] != cfg.bins())
    throw ShapeError("griffin_lim wants [frames, " + std::to_string(cfg.bins()) +
                     "] magnitudes, got " + mag->shape.str());
  if (iters < 0) throw ValueError("griffin_lim: negative iteration count");
  CTensor spec;
  spec.re = from_data(mag->shape, mag->data);
  spec.im = zeros(mag->shape);
  for (int it = 0; it < iters; ++it) {
    auto x = istft(spec, cfg);
    auto proj = stft(x, cfg);
    for (int64_t i = 0; i < mag->numel(); ++i) {
      double re = proj.re->data[static_cast<size_t>(i)];
      double im = proj.im->data[static_cast<size_t>(i)];
      double m = std::hypot(re, im);
      double target = mag->data[static_cast<size_t>(i)];
      if (m < 1e-12) {
        spec.re->data[static_cast<size_t>(i)] = target;
        spec.im->data[static_cast<size_t>(i)] = 0.0;
      } else {
        spec.re->data[static_cast<size_t>(i)] = target * re / m;
        spec.im->data[static_cast<size_t>(i)] = target * im / m;
      }
    }
  }
  return spec;
}

}  // namespace phasor::dsp

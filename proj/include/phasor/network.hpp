// Copyright 2026 the phasor authors
// SPDX-License-Identifier: Apache-2.0
//
// Full enhancement network: compressed-magnitude and unit-phase streams run
// through an expansion block, a dilated dense encoder, a frequency
// downsample, the dual-path attention bottleneck, a dense decoder, a
// frequency upsample, and per-stream output heads. Every op on the phase
// stream commutes with a global rotation of the input spectrum.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "phasor/hadf.hpp"
#include "phasor/nn.hpp"
#include "phasor/signal.hpp"

namespace phasor::nn {

/// Width and structure knobs. Defaults are the Small preset; standard() is
/// the full-size model. freq_bins must be odd (the stride-2 frequency
/// resampling pair is only inverse-shaped for odd extents) and match the
/// STFT bin count when enhance() is used.
struct ModelConfig {
  int64_t c_mag = 32;
  int64_t c_pha = 16;
  int64_t c_mag_head = 8;
  int64_t c_pha_head = 6;
  int64_t c_mag_hidden = 64;
  int64_t c_pha_hidden = 64;
  int64_t n_heads = 4;
  int64_t n_dual_path = 4;
  int64_t freq_bins = 201;
  double alpha = 0.3;

  static ModelConfig small_preset() { return {}; }
  static ModelConfig standard_preset();

  /// Keys: C_mag, C_pha, C_mag_head, C_pha_head, C_mag_hidden, C_pha_hidden,
  /// n_heads, n_dual_path, F, alpha. Unknown keys raise ValueError; absent
  /// keys keep their defaults.
  static ModelConfig from_json(const std::string& text);
  std::string to_json() const;

  /// Raises ValueError on out-of-range fields (widths, parity, alpha).
  void validate() const;
};

/// Ablation switches. Each one surgically removes one invariance mechanism;
/// all of them leave shapes and parameter counts untouched.
struct BreakFlags {
  bool mpicm_gate = false;  // gate from re+im instead of the modulus
  bool attention = false;   // negate Re(Q_pha) in the fused scores
  bool phase_ffn = false;   // gate re/im separately, no modulus
};

struct Network {
  ModelConfig cfg;
  MpicmParams expand;        // 1 -> C per stream, no gate
  DenseBlockParams enc_dense;
  MpicmParams down;          // F -> (F-1)/2 bins
  DualPathParams dual;
  DenseBlockParams dec_dense;
  MpicmParams up;            // back to F bins
  TensorPtr head_mag_w, head_mag_b;  // 3x3 conv, C_mag -> 1, then ReLU
  CTensor head_pha_w;                // 3x3 bias-free conv, C_pha -> 1

  void collect(ParamMap& out) const;
  int64_t param_count() const;
};

Network make_network(Rng& rng, const ModelConfig& cfg, BreakFlags breaks = {});

/// Featurized spectrum: mag [1, T, F] holds |z|^alpha, pha [1, T, F] holds
/// z/|z|. Cells with |z| < 1e-12 get phase 1+0j by convention.
struct SpectrumPair {
  TensorPtr mag;
  CTensor pha;
};

SpectrumPair featurize(const CTensor& spec, double alpha);

/// mag in/out [1, T, F]; the returned magnitude is nonnegative and the
/// returned phase has unit modulus cell by cell. `export_out`, if given,
/// captures the bottleneck's first time-axis attention block.
SpectrumPair forward(const Network& net, const SpectrumPair& in,
                     AttentionExport* export_out = nullptr);
SpectrumPair forward(const Network& net, const SpectrumPair& in, const AttnProbe& probe);

/// Waveform to waveform: analysis STFT, featurize, forward, magnitude
/// decompression m^(1/alpha), recombine, inverse STFT. Input is zero-padded
/// to a hop multiple for analysis and the output trimmed back to the input
/// length. Raises ValueError on empty input.
std::vector<double> enhance(const Network& net, const std::vector<double>& wave,
                            const dsp::StftConfig& scfg);

// ------------------------------------------------------------ serialization
/// Binary checkpoint: "PHSR" magic, format version, the config JSON, then
/// every named parameter as a little-endian f64 array in collect() order.
void save_network(const std::string& path, const Network& net);

/// Rebuilds the network from the embedded config and restores every
/// parameter. Raises ValueError on bad magic, version, or name/size drift.
Network load_network(const std::string& path);

}  // namespace phasor::nn

// Copyright 2026 the phasor authors
// SPDX-License-Identifier: Apache-2.0
//
// Rotation-equivariant building blocks. The phase stream is complex and every
// op touching it commutes with a global rotation x -> x*e^{j theta}; the
// magnitude stream is real and sees the phase stream only through its
// modulus, so it is rotation-invariant. Complex convolutions therefore carry
// no bias term at all.

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "phasor/ops.hpp"
#include "phasor/tensor.hpp"

namespace phasor::nn {

/// Named parameter registry, used for optimizers and serialization.
using ParamMap = std::vector<std::pair<std::string, TensorPtr>>;

/// The two feature streams, kept spatially aligned: mag [B, C_mag, T, K],
/// pha re/im [B, C_pha, T, K].
struct StreamPair {
  TensorPtr mag;
  CTensor pha;
};

// ---- normalizations over the spatial plane (per batch and channel) ----

/// x / sqrt(mean_{T,K} |x|^2 + eps) * gamma; gamma is [1, C, 1, K] so the
/// scale is frequency- and channel-aware. No additive term (equivariance).
CTensor crms_norm(const CTensor& x, const TensorPtr& gamma, double eps = 1e-8);

/// SiLU( x / sqrt(mean_{T,K} x^2 + eps) * gamma + beta ), gamma/beta [1,C,1,1].
TensorPtr rms_norm_silu(const TensorPtr& x, const TensorPtr& gamma, const TensorPtr& beta,
                        double eps = 1e-8);

// ---- normalizations over the trailing channel axis (sequence layouts) ----

/// RMS over the last dim with per-channel gamma/beta, for [.., L, C] tensors.
TensorPtr rms_norm_lastdim(const TensorPtr& x, const TensorPtr& gamma, const TensorPtr& beta,
                           double eps = 1e-8);

/// Complex RMS over the last dim, per-channel gamma, no bias.
CTensor crms_norm_lastdim(const CTensor& x, const TensorPtr& gamma, double eps = 1e-8);

/// Standard layer norm (mean/variance) over the last dim.
TensorPtr layer_norm_lastdim(const TensorPtr& x, const TensorPtr& gamma, const TensorPtr& beta,
                             double eps = 1e-8);

/// Modulation gate with fixed dynamic range (0, 3): 3 * sigmoid(a * x).
/// a is [1, C, 1, K], broadcast over time.
TensorPtr gate_psi(const TensorPtr& x, const TensorPtr& a);

// ---- MPICM: parallel dual-stream conv with interactive cross-gating ----

enum class MpicmMode { kStandard, kExpandNoGate, kDownsample, kUpsample };

struct MpicmParams {
  MpicmMode mode = MpicmMode::kStandard;
  bool break_gate = false;  // ablation: gate from re+im instead of |.|
  ops::Conv2dSpec spec;
  CTensor wc;               // complex kernel; bias-free by construction
  TensorPtr wr, br;         // real kernel and bias
  TensorPtr gamma_pha;      // [1, C_pha, 1, K_out]
  TensorPtr gamma_mag, beta_mag;  // [1, C_mag, 1, 1]
  TensorPtr proj_m_w, proj_m_b;   // 1x1 conv, C_pha -> C_mag
  TensorPtr proj_p_w, proj_p_b;   // 1x1 conv, C_mag -> C_pha
  TensorPtr a_mag, a_pha;   // gate weights [1, C, 1, K_out]

  void collect(const std::string& prefix, ParamMap& out) const;
};

/// Builds parameters for one block. `k_out` is the frequency extent after the
/// conv (needed to size the frequency-aware scales); `dil_t` is the time
/// dilation used by standard mode.
MpicmParams make_mpicm(Rng& rng, MpicmMode mode, int64_t c_in_mag, int64_t c_in_pha,
                       int64_t c_out_mag, int64_t c_out_pha, int64_t k_out, int64_t dil_t = 1);

StreamPair mpicm_forward(const StreamPair& in, const MpicmParams& p);

// ---- dilated dense block: four standard MPICMs, dense concatenation ----

struct DenseBlockParams {
  std::vector<MpicmParams> layers;  // dilations 1, 2, 4, 8
  void collect(const std::string& prefix, ParamMap& out) const;
};

DenseBlockParams make_dense_block(Rng& rng, int64_t c_mag, int64_t c_pha, int64_t k_out,
                                  bool break_gate = false);

/// Layer i consumes the channel concatenation [block input, out_0, .., out_{i-1}]
/// per stream, in that fixed order; the block returns the last layer's output.
StreamPair dense_block(const StreamPair& in, const DenseBlockParams& p);

}  // namespace phasor::nn

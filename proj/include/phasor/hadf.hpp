// Copyright 2026 the phasor authors
// SPDX-License-Identifier: Apache-2.0
//
// Hybrid-attention dual-FFN bottleneck. Attention fuses magnitude and phase
// queries per head; the phase pair enters as [Re, Im] so the score matrix
// contains Re(Q K^H), which a global rotation cannot move. Everything that
// multiplies the phase stream is linear and bias-free, so the whole block
// commutes with x -> x e^{j theta}.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "phasor/nn.hpp"

namespace phasor::nn {

struct HadfConfig {
  int64_t c_mag = 0, c_pha = 0;
  int64_t c_mag_head = 0, c_pha_head = 0;
  int64_t c_mag_hidden = 0, c_pha_hidden = 0;
  int64_t n_heads = 4;
  bool break_attn = false;  // ablation: negate Re(Q_pha)
  bool break_ffn = false;   // ablation: gate re/im separately, no modulus
};

/// Per-head score matrices for batch row 0, plus the pre-softmax split into
/// the magnitude-projection and phase-projection contributions (both already
/// carry the 1/sqrt(d_k) scale, so mag_part + pha_part is the fused logit).
struct AttentionExport {
  int64_t heads = 0, len = 0;
  std::vector<double> score;     // heads*len*len, softmaxed
  std::vector<double> mag_part;  // heads*len*len
  std::vector<double> pha_part;  // heads*len*len
  double at(const std::vector<double>& v, int64_t h, int64_t r, int64_t c) const {
    return v[static_cast<size_t>((h * len + r) * len + c)];
  }
};

struct MagFfnParams {
  TensorPtr w_ih_f, w_hh_f, b_ih_f, b_hh_f;  // forward GRU
  TensorPtr w_ih_b, w_hh_b, b_ih_b, b_hh_b;  // backward GRU
  TensorPtr w_out, b_out;                    // hidden -> c_mag
};

struct PhaFfnParams {
  CTensor w_expand;  // [2*c_pha_hidden, c_pha, 3, 1] complex conv along L
  TensorPtr ln_gamma, ln_beta;  // layer norm over the gate's channel axis
  CTensor w_proj;    // [c_pha, c_pha_hidden, 3, 1]
};

struct HadfParams {
  HadfConfig cfg;
  std::vector<TensorPtr> wq_mag, wk_mag, wv_mag;  // per head [c_mag, c_mag_head]
  std::vector<CTensor> wq_pha, wk_pha, wv_pha;    // per head [c_pha, c_pha_head]
  TensorPtr wo_mag, bo_mag;                       // [heads*c_mag_head, c_mag]
  CTensor wo_pha;                                 // bias-free
  MagFfnParams ffn_mag;
  PhaFfnParams ffn_pha;
  // pre-attention, pre-FFN and post norms; phase norms carry no bias
  TensorPtr n1_mag_g, n1_mag_b, n2_mag_g, n2_mag_b, n3_mag_g, n3_mag_b;
  TensorPtr n1_pha_g, n2_pha_g, n3_pha_g;

  void collect(const std::string& prefix, ParamMap& out) const;
};

HadfParams make_hadf(Rng& rng, const HadfConfig& cfg);

struct SeqPair {
  TensorPtr mag;  // [B', L, c_mag]
  CTensor pha;    // [B', L, c_pha]
};

/// Fused multi-head attention over a sequence pair. When `export_out` is
/// non-null it receives the batch-0 score matrices and their decomposition.
SeqPair hybrid_attention(const SeqPair& z, const HadfParams& p,
                         AttentionExport* export_out = nullptr);

/// BiGRU expansion to c_mag_hidden, LeakyReLU(0.01), linear back to c_mag.
TensorPtr mag_ffn(const TensorPtr& z, const MagFfnParams& p);

/// Complex conv expansion split into (Z1, Z2); Z1 is gated by
/// SiLU(LayerNorm(|Z2|)) and projected back. `break_ffn` gates re and im
/// separately instead, which destroys the rotation property.
CTensor pha_ffn(const CTensor& z, const PhaFfnParams& p, bool break_ffn = false);

/// Pre-norm -> attention -> residual -> pre-norm -> FFN -> residual ->
/// post-norm, then a block-level global residual.
SeqPair hadf_block(const SeqPair& z, const HadfParams& p,
                   AttentionExport* export_out = nullptr);

// Dual-path reshapes: [B, C, T, F] viewed as (B F) sequences over T or (B T)
// sequences over F, channels last. unfold_* invert fold_* bit-exactly.
TensorPtr fold_time(const TensorPtr& x);
TensorPtr unfold_time(const TensorPtr& x, int64_t b, int64_t f);
TensorPtr fold_freq(const TensorPtr& x);
TensorPtr unfold_freq(const TensorPtr& x, int64_t b, int64_t t);

struct DualPathParams {
  std::vector<HadfParams> time_blocks, freq_blocks;  // n entries each
  void collect(const std::string& prefix, ParamMap& out) const;
};

DualPathParams make_dual_path(Rng& rng, const HadfConfig& cfg, int64_t n = 4);

/// Selects one block of the stack for attention export: `block` indexes the
/// stack, `freq_axis` picks the frequency pass over the time pass.
struct AttnProbe {
  AttentionExport* out = nullptr;
  int64_t block = 0;
  bool freq_axis = false;
};

/// Alternating time-axis and frequency-axis blocks over [B, C, T, F'] maps:
/// time pass runs on (B F') sequences of length T, frequency pass on (B T)
/// sequences of length F'. `export_out`, if given, captures the first time
/// block's attention.
StreamPair dual_path(const StreamPair& in, const DualPathParams& p,
                     AttentionExport* export_out = nullptr);
StreamPair dual_path(const StreamPair& in, const DualPathParams& p, const AttnProbe& probe);

}  // namespace phasor::nn

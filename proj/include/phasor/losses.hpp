// Copyright 2026 the phasor authors
// SPDX-License-Identifier: Apache-2.0
//
// Training losses (tape-differentiable) and reporting metrics (plain doubles).
//
// Phase errors use the circular absolute error f(x) = |x - 2pi*round(x/2pi)|
// in three directions: instantaneous phase (raw difference), group delay
// (first difference along frequency) and instantaneous angular frequency
// (first difference along time).

#pragma once

#include <string>
#include <vector>

#include "phasor/tensor.hpp"

namespace phasor::loss {

struct LossWeights {
  double w_mag = 0.9;
  double w_pha = 0.3;
  double w_com = 0.2;
  double w_metric = 0.05;  // discriminator slot, term is identically 0 here
  double w_con = 0.1;
  double w_time = 0.2;
  double w_mpd = 0.05;     // second discriminator slot, also 0
  double w_omni = 2e4;     // phase-retrieval objective
};

enum class LossKind { DN, USE, PR };

/// Circular absolute error per element, in [0, pi]. Differentiable away from
/// the wrap points.
TensorPtr anti_wrap_t(const TensorPtr& x);

struct PhaseLossParts {
  TensorPtr total;  // (ip + gd + iaf) / 3, scalar on the tape
  double ip = 0.0, gd = 0.0, iaf = 0.0;
  bool degenerate = false;  // some direction had no valid differences
};

/// Mean circular error over the three phase directions. Inputs are angle
/// grids [T, F] in radians.
PhaseLossParts phase_loss(const TensorPtr& pred_phase, const TensorPtr& ref_phase);

/// Magnitude-weighted sum of circular errors, summed over all three
/// directions with unit direction weights. Differences along frequency/time
/// take the weight of their first cell. `weights` should be the clean
/// magnitude normalized to sum 1.
TensorPtr omni_loss(const TensorPtr& pred_phase, const TensorPtr& ref_phase,
                    const TensorPtr& weights);

/// What the network hands to the loss. `respec` is the spectrum of the
/// resynthesized waveform (for the consistency term); it may be empty, in
/// which case that term is skipped.
struct SpectrumPrediction {
  TensorPtr mag;   // compressed magnitude [T, F]
  CTensor pha;     // unit-modulus phase [T, F]
  TensorPtr wave;  // time signal
  CTensor respec;  // uncompressed spectrum of `wave`, optional
};

struct SpectrumTarget {
  TensorPtr mag;           // compressed magnitude [T, F]
  TensorPtr phase;         // angles [T, F], radians
  TensorPtr wave;          // time signal
  TensorPtr omni_weights;  // normalized clean magnitude, PR mode only
};

struct LossBreakdown {
  TensorPtr total;  // scalar on the tape
  double mag = 0.0, pha = 0.0, com = 0.0, con = 0.0, time = 0.0, omni = 0.0;
  double metric = 0.0, mpd = 0.0;  // always 0, kept so reports list every slot
  bool phase_degenerate = false;
};

/// Weighted composite objective.
///   DN:  0.9 mag + 0.3 pha + 0.2 com + 0.05*0 + 0.1 con + 0.2 time
///   USE: DN total + 0.05*0
///   PR:  2e4 * omni
/// Magnitude terms operate in the compressed (alpha = 0.3) domain.
LossBreakdown composite_loss(LossKind kind, const SpectrumPrediction& pred,
                             const SpectrumTarget& target, double alpha = 0.3,
                             const LossWeights& w = LossWeights{});

/// Power-law compression of a complex spectrum: z * (|z| + eps)^(alpha-1).
CTensor compress_complex(const CTensor& z, double alpha, double eps = 1e-12);

// -------- reporting metrics (not taped) --------

/// Magnitude-weighted mean circular phase error in degrees.
/// W = clean_mag / sum(clean_mag); throws on an all-zero weight mass.
double pd_metric(const TensorPtr& pred_phase, const TensorPtr& ref_phase,
                 const TensorPtr& clean_mag);

/// Mean over the three phase directions of sum(W * f(delta)) / pi, in [0, 1].
double wopd_metric(const TensorPtr& pred_phase, const TensorPtr& ref_phase,
                   const TensorPtr& clean_mag);

/// Scale-invariant signal-to-distortion ratio in dB, capped at +120.
double si_sdr(const std::vector<double>& est, const std::vector<double>& ref);

}  // namespace phasor::loss

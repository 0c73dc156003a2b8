// Copyright 2026 the phasor authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "phasor/ops.hpp"

namespace phasor::dsp {

/// 25 ms window, 25% hop, one-sided spectrum of 201 bins at 16 kHz.
struct StftConfig {
  int sample_rate = 16000;
  int64_t win_len = 400;
  int64_t hop = 100;
  int64_t fft_size = 400;
  int64_t bins() const { return fft_size / 2 + 1; }
};

/// Periodic square-root Hann window of length n.
std::vector<double> sqrt_hann(int64_t n);

/// x [N] with N a multiple of hop -> complex spectrum [T, F], T = N/hop + 1.
/// The signal is zero-padded by win_len/2 on both sides before framing, so
/// the least-squares inverse below reconstructs every input sample exactly.
/// Differentiable end to end (framing, windowing, DFT-by-matmul).
CTensor stft(const TensorPtr& x, const StftConfig& cfg);

/// spec [T, F] -> x [(T-1)*hop]: windowed inverse DFT, overlap-add, division
/// by the analysis-synthesis window envelope, edge trim. Differentiable.
TensorPtr istft(const CTensor& spec, const StftConfig& cfg);

/// Pads with zeros so stft() accepts the signal; returns the padded copy.
std::vector<double> pad_to_hop(const std::vector<double>& x, const StftConfig& cfg);

// ------------------------------------------------------------------- wav io
struct WavData {
  std::vector<double> samples;  // in [-1, 1)
  int sample_rate = 0;
};

/// Reads 16-bit PCM mono WAV; anything else raises ValueError naming the
/// offending field.
WavData read_wav(const std::string& path);
void write_wav(const std::string& path, const std::vector<double>& samples, int sample_rate);

// -------------------------------------------------------------- degradation
struct DegradeSpec {
  std::string kind;          // DN, DR, BWE, DN+DR, DN+DR+BWE
  double snr_db = 0.0;       // DN
  double cutoff_hz = 4000.0; // BWE
  std::vector<double> rir;   // DR; empty means caller wants make_rir
};

/// Scales `noise` so that 10*log10(P_clean/P_noise) == snr_db exactly, then
/// mixes. Throws on silent clean input.
std::vector<double> add_noise(const std::vector<double>& clean,
                              const std::vector<double>& noise, double snr_db);

/// Direct convolution, output truncated to the input length.
std::vector<double> convolve_rir(const std::vector<double>& x, const std::vector<double>& rir);

/// Exponentially decaying noise tail after a unit direct-path tap.
std::vector<double> make_rir(Rng& rng, int sample_rate, double t60_s, double len_s);

/// Low-pass resampling down to 2*cutoff_hz and back: decimate with a Kaiser
/// windowed-sinc anti-alias filter, then zero-stuff and interpolate with the
/// same filter. Zero net group delay; output length equals input length.
std::vector<double> bandwidth_limit(const std::vector<double>& x, double cutoff_hz,
                                    int sample_rate);

/// Applies the requested degradations; composites run DR -> DN -> BWE.
/// White Gaussian noise is drawn from rng when the spec carries none.
std::vector<double> degrade(const std::vector<double>& clean, const DegradeSpec& spec,
                            Rng& rng);

// -------------------------------------------------------------- phase init
/// Classic alternating-projection phase retrieval from a magnitude
/// spectrogram [T, F], zero-phase start. Returns the final complex spectrum
/// (magnitude replaced by the target each round).
CTensor griffin_lim(const TensorPtr& mag, const StftConfig& cfg, int iters);

}  // namespace phasor::dsp

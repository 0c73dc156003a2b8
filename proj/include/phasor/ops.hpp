// Copyright 2026 the phasor authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "phasor/tape.hpp"
#include "phasor/tensor.hpp"

/// Differentiable primitives. Every function builds the forward value
/// immediately; when a TapeScope is live and an input requires grad it also
/// records a backward closure. Binary ops broadcast per-dim singletons with
/// shapes right-aligned, numpy style.
namespace phasor::ops {

// ------------------------------------------------------------- elementwise
TensorPtr add(const TensorPtr& a, const TensorPtr& b);
TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
TensorPtr mul(const TensorPtr& a, const TensorPtr& b);
TensorPtr div(const TensorPtr& a, const TensorPtr& b);
TensorPtr scale(const TensorPtr& a, double c);
TensorPtr add_const(const TensorPtr& a, double c);
TensorPtr neg(const TensorPtr& a);

TensorPtr sigmoid(const TensorPtr& a);
TensorPtr tanh_op(const TensorPtr& a);
TensorPtr silu(const TensorPtr& a);
TensorPtr relu(const TensorPtr& a);
TensorPtr sqrt_op(const TensorPtr& a);       // d/dx guarded at 0
TensorPtr pow_const(const TensorPtr& a, double p);
TensorPtr abs_op(const TensorPtr& a);        // subgradient 0 at 0
TensorPtr atan2_op(const TensorPtr& y, const TensorPtr& x);  // same shapes
TensorPtr modulus(const TensorPtr& re, const TensorPtr& im); // sqrt(re^2+im^2)

/// |x - 2*pi*round(x/(2*pi))|: distance to the nearest multiple of 2*pi.
TensorPtr anti_wrap(const TensorPtr& a);

// -------------------------------------------------------------- reductions
TensorPtr reduce_sum(const TensorPtr& a, const std::vector<int>& dims, bool keepdims);
TensorPtr reduce_mean(const TensorPtr& a, const std::vector<int>& dims, bool keepdims);
TensorPtr sum_all(const TensorPtr& a);   // shape {1}
TensorPtr mean_all(const TensorPtr& a);  // shape {1}

// ------------------------------------------------------------------ linear
/// a [..., L, K] times w [K, M] -> [..., L, M]; leading dims are batch.
TensorPtr matmul(const TensorPtr& a, const TensorPtr& w);
/// a [B, L, K] times b [B, K, M] (or [B, M, K] when trans_b) -> [B, L, M].
TensorPtr bmm(const TensorPtr& a, const TensorPtr& b, bool trans_b);
TensorPtr softmax_lastdim(const TensorPtr& a);

// ------------------------------------------------------------ shape moves
TensorPtr slice_dim(const TensorPtr& a, int dim, int64_t start, int64_t len);
TensorPtr concat_dim(const std::vector<TensorPtr>& xs, int dim);
TensorPtr permute(const TensorPtr& a, const std::vector<int>& perm);
TensorPtr reshape(const TensorPtr& a, const Shape& s);

// ----------------------------------------------------------------- conv2d
/// Activations are [B, C, H, W]; weights [C_out, C_in, KH, KW]. Transposed
/// weights are [C_in, C_out, KH, KW]. Bias may be an empty TensorPtr.
struct Conv2dSpec {
  int stride_h = 1, stride_w = 1;
  int dil_h = 1, dil_w = 1;
  int pad_h0 = 0, pad_h1 = 0;
  int pad_w0 = 0, pad_w1 = 0;
};
/// Fills pad fields for output size == input size at stride 1.
Conv2dSpec same_pad(int kh, int kw, int dil_h = 1, int dil_w = 1);

TensorPtr conv2d(const TensorPtr& x, const TensorPtr& w, const TensorPtr& bias,
                 const Conv2dSpec& spec);
TensorPtr conv2d_transpose(const TensorPtr& x, const TensorPtr& w, const TensorPtr& bias,
                           const Conv2dSpec& spec);

// -------------------------------------------------------------------- gru
/// Single-layer GRU over x [B, T, I] -> [B, T, H], zero initial state,
/// gate order (reset, update, candidate), weights w_ih [3H, I], w_hh [3H, H],
/// biases [3H]. reverse=true scans t from the end; outputs keep original
/// positions.
TensorPtr gru_seq(const TensorPtr& x, const TensorPtr& w_ih, const TensorPtr& w_hh,
                  const TensorPtr& b_ih, const TensorPtr& b_hh, bool reverse);

// ---------------------------------------------------------------- framing
/// x [N] -> frames [T, win] with T = (N - win) / hop + 1; N must cover.
TensorPtr frame_signal(const TensorPtr& x, int64_t win, int64_t hop);
/// frames [T, win] -> x [out_len], overlap-added; adjoint of frame_signal.
TensorPtr overlap_add(const TensorPtr& frames, int64_t hop, int64_t out_len);

// ---------------------------------------------------------------- complex
CTensor cadd(const CTensor& a, const CTensor& b);
CTensor csub(const CTensor& a, const CTensor& b);
CTensor cmul(const CTensor& a, const CTensor& b);
CTensor cscale(const CTensor& a, double c);
CTensor conj(const CTensor& a);
/// a [..., L, K] times w [K, M], both complex, via four real matmuls.
CTensor cmatmul(const CTensor& a, const CTensor& w);
TensorPtr cmodulus(const CTensor& a);
TensorPtr phase_of(const CTensor& a);  // atan2(im, re)
/// Complex-by-real product (the invariant-modulation pattern).
CTensor cmul_real(const CTensor& a, const TensorPtr& r);
CTensor cconv2d(const CTensor& x, const CTensor& w, const Conv2dSpec& spec);  // bias-free
/// Bias-free complex transposed convolution; w is [C_in, C_out, KH, KW].
CTensor cconv2d_transpose(const CTensor& x, const CTensor& w, const Conv2dSpec& spec);
/// z / |z| with exactly unit modulus; cells with |z| < floor become 1+0j and
/// pass no gradient (the angle is undefined there).
CTensor cnormalize(const CTensor& z, double floor = 1e-12);

}  // namespace phasor::ops

// Copyright 2026 the phasor authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include "phasor/kernels.hpp"
#include "phasor/ops.hpp"

namespace phasor::ops {

namespace {

bool want_tape3(const TensorPtr& a, const TensorPtr& b, const TensorPtr& c) {
  if (!Tape::current()) return false;
  return (a && a->requires_grad) || (b && b->requires_grad) || (c && c->requires_grad);
}

int64_t conv_out(int64_t in, int64_t k, int64_t stride, int64_t dil, int64_t p0, int64_t p1) {
  int64_t eff = (k - 1) * dil + 1;
  int64_t span = in + p0 + p1 - eff;
  if (span < 0) return 0;
  return span / stride + 1;
}

struct ConvDims {
  int64_t B, CI, H, W, CO, KH, KW, OH, OW;
};

ConvDims conv_dims(const Shape& xs, const Shape& ws, const Conv2dSpec& sp, bool transposed) {
  if (xs.rank != 4 || ws.rank != 4)
    throw ShapeError("conv2d wants rank-4 x and w, got " + xs.str() + " and " + ws.str());
  ConvDims d{};
  d.B = xs[0];
  d.CI = xs[1];
  d.H = xs[2];
  d.W = xs[3];
  if (transposed) {
    if (ws[0] != d.CI)
      throw ShapeError("conv2d_transpose channel mismatch: x " + xs.str() + " w " + ws.str());
    d.CO = ws[1];
    d.KH = ws[2];
    d.KW = ws[3];
    d.OH = (d.H - 1) * sp.stride_h - (sp.pad_h0 + sp.pad_h1) + (d.KH - 1) * sp.dil_h + 1;
    d.OW = (d.W - 1) * sp.stride_w - (sp.pad_w0 + sp.pad_w1) + (d.KW - 1) * sp.dil_w + 1;
    if (d.OH <= 0 || d.OW <= 0) throw ShapeError("conv2d_transpose output collapses to zero");
  } else {
    if (ws[1] != d.CI)
      throw ShapeError("conv2d channel mismatch: x " + xs.str() + " w " + ws.str());
    d.CO = ws[0];
    d.KH = ws[2];
    d.KW = ws[3];
    d.OH = conv_out(d.H, d.KH, sp.stride_h, sp.dil_h, sp.pad_h0, sp.pad_h1);
    d.OW = conv_out(d.W, d.KW, sp.stride_w, sp.dil_w, sp.pad_w0, sp.pad_w1);
    if (d.OH <= 0 || d.OW <= 0) throw ShapeError("conv2d output collapses to zero");
  }
  return d;
}

void check_bias(const TensorPtr& bias, int64_t co) {
  if (bias && (bias->shape.rank != 1 || bias->shape[0] != co))
    throw ShapeError("conv bias wants [" + std::to_string(co) + "], got " + bias->shape.str());
}

// out[b,co,oh,:] += wv * x[b,ci,ih,:] shifted; the stride_w==1 row window.
struct RowWin {
  int64_t lo, hi, shift;  // ow in [lo,hi), iw = ow + shift
};

RowWin row_win(int64_t kw, int64_t dil_w, int64_t pad_w0, int64_t W, int64_t OW) {
  RowWin r;
  r.shift = kw * dil_w - pad_w0;
  r.lo = std::max<int64_t>(0, -r.shift);
  r.hi = std::min<int64_t>(OW, W - r.shift);
  return r;
}

void conv2d_forward(double* out, const double* x, const double* w, const double* bias,
                    const ConvDims& d, const Conv2dSpec& sp) {
  const auto& k = kernels::active();
  for (int64_t b = 0; b < d.B; ++b)
    for (int64_t co = 0; co < d.CO; ++co)
      for (int64_t oh = 0; oh < d.OH; ++oh) {
        double* orow = out + ((b * d.CO + co) * d.OH + oh) * d.OW;
        for (int64_t ci = 0; ci < d.CI; ++ci)
          for (int64_t kh = 0; kh < d.KH; ++kh) {
            int64_t ih = oh * sp.stride_h - sp.pad_h0 + kh * sp.dil_h;
            if (ih < 0 || ih >= d.H) continue;
            const double* xrow = x + ((b * d.CI + ci) * d.H + ih) * d.W;
            const double* wrow = w + ((co * d.CI + ci) * d.KH + kh) * d.KW;
            for (int64_t kw = 0; kw < d.KW; ++kw) {
              double wv = wrow[kw];
              if (wv == 0.0) continue;
              if (sp.stride_w == 1) {
                RowWin rw = row_win(kw, sp.dil_w, sp.pad_w0, d.W, d.OW);
                if (rw.hi > rw.lo)
                  k.axpy(orow + rw.lo, wv, xrow + rw.lo + rw.shift,
                         static_cast<size_t>(rw.hi - rw.lo));
              } else {
                for (int64_t ow = 0; ow < d.OW; ++ow) {
                  int64_t iw = ow * sp.stride_w - sp.pad_w0 + kw * sp.dil_w;
                  if (iw >= 0 && iw < d.W) orow[ow] += wv * xrow[iw];
                }
              }
            }
          }
        if (bias) {
          double bv = bias[co];
          for (int64_t ow = 0; ow < d.OW; ++ow) orow[ow] += bv;
        }
      }
}

void conv2d_backward(const double* go, const double* x, const double* w, double* gx,
                     double* gw, double* gb, const ConvDims& d, const Conv2dSpec& sp) {
  const auto& k = kernels::active();
  for (int64_t b = 0; b < d.B; ++b)
    for (int64_t co = 0; co < d.CO; ++co)
      for (int64_t oh = 0; oh < d.OH; ++oh) {
        const double* grow = go + ((b * d.CO + co) * d.OH + oh) * d.OW;
        if (gb) gb[co] += k.sum(grow, static_cast<size_t>(d.OW));
        if (!gx && !gw) continue;
        for (int64_t ci = 0; ci < d.CI; ++ci)
          for (int64_t kh = 0; kh < d.KH; ++kh) {
            int64_t ih = oh * sp.stride_h - sp.pad_h0 + kh * sp.dil_h;
            if (ih < 0 || ih >= d.H) continue;
            const int64_t xoff = ((b * d.CI + ci) * d.H + ih) * d.W;
            const int64_t woff = ((co * d.CI + ci) * d.KH + kh) * d.KW;
            for (int64_t kw = 0; kw < d.KW; ++kw) {
              if (sp.stride_w == 1) {
                RowWin rw = row_win(kw, sp.dil_w, sp.pad_w0, d.W, d.OW);
                if (rw.hi <= rw.lo) continue;
                size_t len = static_cast<size_t>(rw.hi - rw.lo);
                if (gx)
                  k.axpy(gx + xoff + rw.lo + rw.shift, w[woff + kw], grow + rw.lo, len);
                if (gw) gw[woff + kw] += k.dot(grow + rw.lo, x + xoff + rw.lo + rw.shift, len);
              } else {
                for (int64_t ow = 0; ow < d.OW; ++ow) {
                  int64_t iw = ow * sp.stride_w - sp.pad_w0 + kw * sp.dil_w;
                  if (iw < 0 || iw >= d.W) continue;
                  if (gx) gx[xoff + iw] += w[woff + kw] * grow[ow];
                  if (gw) gw[woff + kw] += x[xoff + iw] * grow[ow];
                }
              }
            }
          }
      }
}

void convt_forward(double* out, const double* x, const double* w, const double* bias,
                   const ConvDims& d, const Conv2dSpec& sp) {
  for (int64_t b = 0; b < d.B; ++b) {
    for (int64_t ci = 0; ci < d.CI; ++ci)
      for (int64_t ih = 0; ih < d.H; ++ih) {
        const double* xrow = x + ((b * d.CI + ci) * d.H + ih) * d.W;
        for (int64_t co = 0; co < d.CO; ++co)
          for (int64_t kh = 0; kh < d.KH; ++kh) {
            int64_t oh = ih * sp.stride_h - sp.pad_h0 + kh * sp.dil_h;
            if (oh < 0 || oh >= d.OH) continue;
            double* orow = out + ((b * d.CO + co) * d.OH + oh) * d.OW;
            const double* wrow = w + ((ci * d.CO + co) * d.KH + kh) * d.KW;
            for (int64_t kw = 0; kw < d.KW; ++kw) {
              double wv = wrow[kw];
              if (wv == 0.0) continue;
              for (int64_t iw = 0; iw < d.W; ++iw) {
                int64_t ow = iw * sp.stride_w - sp.pad_w0 + kw * sp.dil_w;
                if (ow >= 0 && ow < d.OW) orow[ow] += wv * xrow[iw];
              }
            }
          }
      }
    if (bias)
      for (int64_t co = 0; co < d.CO; ++co) {
        double bv = bias[co];
        double* plane = out + (b * d.CO + co) * d.OH * d.OW;
        for (int64_t i = 0; i < d.OH * d.OW; ++i) plane[i] += bv;
      }
  }
}

void convt_backward(const double* go, const double* x, const double* w, double* gx,
                    double* gw, double* gb, const ConvDims& d, const Conv2dSpec& sp) {
  const auto& k = kernels::active();
  if (gb)
    for (int64_t b = 0; b < d.B; ++b)
      for (int64_t co = 0; co < d.CO; ++co)
        gb[co] += k.sum(go + (b * d.CO + co) * d.OH * d.OW,
                        static_cast<size_t>(d.OH * d.OW));
  if (!gx && !gw) return;
  for (int64_t b = 0; b < d.B; ++b)
    for (int64_t ci = 0; ci < d.CI; ++ci)
      for (int64_t ih = 0; ih < d.H; ++ih) {
        const int64_t xoff = ((b * d.CI + ci) * d.H + ih) * d.W;
        for (int64_t co = 0; co < d.CO; ++co)
          for (int64_t kh = 0; kh < d.KH; ++kh) {
            int64_t oh = ih * sp.stride_h - sp.pad_h0 + kh * sp.dil_h;
            if (oh < 0 || oh >= d.OH) continue;
            const double* grow = go + ((b * d.CO + co) * d.OH + oh) * d.OW;
            const int64_t woff = ((ci * d.CO + co) * d.KH + kh) * d.KW;
            for (int64_t kw = 0; kw < d.KW; ++kw) {
              for (int64_t iw = 0; iw < d.W; ++iw) {
                int64_t ow = iw * sp.stride_w - sp.pad_w0 + kw * sp.dil_w;
                if (ow < 0 || ow >= d.OW) continue;
                if (gx) gx[xoff + iw] += w[woff + kw] * grow[ow];
                if (gw) gw[woff + kw] += x[xoff + iw] * grow[ow];
              }
            }
          }
      }
}

}  // namespace

TensorPtr conv2d(const TensorPtr& x, const TensorPtr& w, const TensorPtr& bias,
                 const Conv2dSpec& spec) {
  ConvDims d = conv_dims(x->shape, w->shape, spec, false);
  check_bias(bias, d.CO);
  auto out = std::make_shared<Tensor>(Shape{d.B, d.CO, d.OH, d.OW});
  conv2d_forward(out->data.data(), x->data.data(), w->data.data(),
                 bias ? bias->data.data() : nullptr, d, spec);
  if (want_tape3(x, w, bias)) {
    out->requires_grad = true;
    Tape::current()->push([x, w, bias, out, d, spec] {
      out->ensure_grad();
      double* gx = nullptr;
      double* gw = nullptr;
      double* gb = nullptr;
      if (x->requires_grad) {
        x->ensure_grad();
        gx = x->grad.data();
      }
      if (w->requires_grad) {
        w->ensure_grad();
        gw = w->grad.data();
      }
      if (bias && bias->requires_grad) {
        bias->ensure_grad();
        gb = bias->grad.data();
      }
      conv2d_backward(out->grad.data(), x->data.data(), w->data.data(), gx, gw, gb, d, spec);
    });
  }
  return out;
}

TensorPtr conv2d_transpose(const TensorPtr& x, const TensorPtr& w, const TensorPtr& bias,
                           const Conv2dSpec& spec) {
  ConvDims d = conv_dims(x->shape, w->shape, spec, true);
  check_bias(bias, d.CO);
  auto out = std::make_shared<Tensor>(Shape{d.B, d.CO, d.OH, d.OW});
  convt_forward(out->data.data(), x->data.data(), w->data.data(),
                bias ? bias->data.data() : nullptr, d, spec);
  if (want_tape3(x, w, bias)) {
    out->requires_grad = true;
    Tape::current()->push([x, w, bias, out, d, spec] {
      out->ensure_grad();
      double* gx = nullptr;
      double* gw = nullptr;
      double* gb = nullptr;
      if (x->requires_grad) {
        x->ensure_grad();
        gx = x->grad.data();
      }
      if (w->requires_grad) {
        w->ensure_grad();
        gw = w->grad.data();
      }
      if (bias && bias->requires_grad) {
        bias->ensure_grad();
        gb = bias->grad.data();
      }
      convt_backward(out->grad.data(), x->data.data(), w->data.data(), gx, gw, gb, d, spec);
    });
  }
  return out;
}

}  // namespace phasor::ops

// Copyright 2026 the phasor authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <vector>

#include "phasor/kernels.hpp"
#include "phasor/ops.hpp"

namespace phasor::ops {

namespace {

double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

// Gate preactivations follow the usual layout [reset | update | candidate]
// along the 3H axis; the candidate's hidden-side term is gated by reset
// before tanh, so that term (hn_pre) is what backward needs saved.
TensorPtr gru_seq(const TensorPtr& x, const TensorPtr& w_ih, const TensorPtr& w_hh,
                  const TensorPtr& b_ih, const TensorPtr& b_hh, bool reverse) {
  if (x->shape.rank != 3) throw ShapeError("gru_seq wants x rank 3, got " + x->shape.str());
  const int64_t B = x->shape[0], T = x->shape[1], I = x->shape[2];
  if (w_hh->shape.rank != 2 || w_ih->shape.rank != 2)
    throw ShapeError("gru_seq weights must be rank 2");
  const int64_t H = w_hh->shape[1];
  if (w_ih->shape[0] != 3 * H || w_ih->shape[1] != I || w_hh->shape[0] != 3 * H ||
      b_ih->shape.numel() != 3 * H || b_hh->shape.numel() != 3 * H)
    throw ShapeError("gru_seq weight shapes inconsistent: w_ih " + w_ih->shape.str() +
                     " w_hh " + w_hh->shape.str() + " for x " + x->shape.str());

  auto out = std::make_shared<Tensor>(Shape{B, T, H});
  const bool taped = Tape::current() != nullptr &&
                     (x->requires_grad || w_ih->requires_grad || w_hh->requires_grad ||
                      b_ih->requires_grad || b_hh->requires_grad);

  const auto& k = kernels::active();
  const size_t sB = static_cast<size_t>(B), sI = static_cast<size_t>(I),
               sH = static_cast<size_t>(H);
  std::vector<double> xt(sB * sI), gi(sB * 3 * sH), gh(sB * 3 * sH), hprev(sB * sH, 0.0),
      hnew(sB * sH);
  // per-step activations, saved only when recording
  std::vector<double> sv_r, sv_z, sv_n, sv_hnp;
  if (taped) {
    sv_r.resize(static_cast<size_t>(T) * sB * sH);
    sv_z.resize(static_cast<size_t>(T) * sB * sH);
    sv_n.resize(static_cast<size_t>(T) * sB * sH);
    sv_hnp.resize(static_cast<size_t>(T) * sB * sH);
  }

  auto map_t = [T, reverse](int64_t s) { return reverse ? T - 1 - s : s; };

  for (int64_t s = 0; s < T; ++s) {
    const int64_t t = map_t(s);
    for (int64_t b = 0; b < B; ++b)
      std::copy(x->data.begin() + (b * T + t) * I, x->data.begin() + (b * T + t) * I + I,
                xt.begin() + b * I);
    for (int64_t b = 0; b < B; ++b) {
      std::copy(b_ih->data.begin(), b_ih->data.end(), gi.begin() + b * 3 * H);
      std::copy(b_hh->data.begin(), b_hh->data.end(), gh.begin() + b * 3 * H);
    }
    k.gemm_nt(gi.data(), xt.data(), w_ih->data.data(), sB, sI, 3 * sH);
    k.gemm_nt(gh.data(), hprev.data(), w_hh->data.data(), sB, sH, 3 * sH);

    double* rs = taped ? sv_r.data() + s * B * H : nullptr;
    double* zs = taped ? sv_z.data() + s * B * H : nullptr;
    double* ns = taped ? sv_n.data() + s * B * H : nullptr;
    double* ps = taped ? sv_hnp.data() + s * B * H : nullptr;
    for (int64_t b = 0; b < B; ++b) {
      const double* gib = gi.data() + b * 3 * H;
      const double* ghb = gh.data() + b * 3 * H;
      for (int64_t h = 0; h < H; ++h) {
        double r = sigm(gib[h] + ghb[h]);
        double z = sigm(gib[H + h] + ghb[H + h]);
        double hp = ghb[2 * H + h];
        double n = std::tanh(gib[2 * H + h] + r * hp);
        double hv = (1.0 - z) * n + z * hprev[static_cast<size_t>(b * H + h)];
        hnew[static_cast<size_t>(b * H + h)] = hv;
        if (taped) {
          rs[b * H + h] = r;
          zs[b * H + h] = z;
          ns[b * H + h] = n;
          ps[b * H + h] = hp;
        }
      }
    }
    for (int64_t b = 0; b < B; ++b)
      std::copy(hnew.begin() + b * H, hnew.begin() + b * H + H,
                out->data.begin() + (b * T + t) * H);
    hprev.swap(hnew);
  }

  if (taped) {
    out->requires_grad = true;
    Tape::current()->push([x, w_ih, w_hh, b_ih, b_hh, out, B, T, I, H, reverse,
                           sv_r = std::move(sv_r), sv_z = std::move(sv_z),
                           sv_n = std::move(sv_n), sv_hnp = std::move(sv_hnp)] {
      out->ensure_grad();
      const auto& k = kernels::active();
      const size_t sB = static_cast<size_t>(B), sI = static_cast<size_t>(I),
                   sH = static_cast<size_t>(H);
      auto map_t = [T, reverse](int64_t s) { return reverse ? T - 1 - s : s; };

      const bool gx = x->requires_grad, gwi = w_ih->requires_grad, gwh = w_hh->requires_grad,
                 gbi = b_ih->requires_grad, gbh = b_hh->requires_grad;
      if (gx) x->ensure_grad();
      if (gwi) w_ih->ensure_grad();
      if (gwh) w_hh->ensure_grad();
      if (gbi) b_ih->ensure_grad();
      if (gbh) b_hh->ensure_grad();

      std::vector<double> dh_next(sB * sH, 0.0), dh(sB * sH), hprev(sB * sH),
          dgi(sB * 3 * sH), dgh(sB * 3 * sH), dxt(sB * sI), xt(sB * sI), dhp(sB * sH);

      for (int64_t s = T - 1; s >= 0; --s) {
        const int64_t t = map_t(s);
        if (s == 0) {
          std::fill(hprev.begin(), hprev.end(), 0.0);
        } else {
          const int64_t tp = map_t(s - 1);
          for (int64_t b = 0; b < B; ++b)
            std::copy(out->data.begin() + (b * T + tp) * H,
                      out->data.begin() + (b * T + tp) * H + H, hprev.begin() + b * H);
        }
        for (int64_t b = 0; b < B; ++b)
          for (int64_t h = 0; h < H; ++h)
            dh[static_cast<size_t>(b * H + h)] =
                out->grad[static_cast<size_t>((b * T + t) * H + h)] +
                dh_next[static_cast<size_t>(b * H + h)];

        const double* rs = sv_r.data() + s * B * H;
        const double* zs = sv_z.data() + s * B * H;
        const double* ns = sv_n.data() + s * B * H;
        const double* ps = sv_hnp.data() + s * B * H;
        for (int64_t i = 0; i < B * H; ++i) {
          const int64_t b = i / H, h = i % H;
          double r = rs[i], z = zs[i], n = ns[i], hp = ps[i];
          double d = dh[static_cast<size_t>(i)];
          double dz = d * (hprev[static_cast<size_t>(i)] - n);
          double dn = d * (1.0 - z);
          double dnpre = dn * (1.0 - n * n);
          double dr = dnpre * hp;
          double dhnp = dnpre * r;
          double drpre = dr * r * (1.0 - r);
          double dzpre = dz * z * (1.0 - z);
          dhp[static_cast<size_t>(i)] = d * z;
          double* gib = dgi.data() + b * 3 * H;
          double* ghb = dgh.data() + b * 3 * H;
          gib[h] = drpre;
          gib[H + h] = dzpre;
          gib[2 * H + h] = dnpre;
          ghb[h] = drpre;
          ghb[H + h] = dzpre;
          ghb[2 * H + h] = dhnp;
        }

        if (gx || gwi) {
          for (int64_t b = 0; b < B; ++b)
            std::copy(x->data.begin() + (b * T + t) * I,
                      x->data.begin() + (b * T + t) * I + I, xt.begin() + b * I);
        }
        if (gx) {
          std::fill(dxt.begin(), dxt.end(), 0.0);
          k.gemm_nn(dxt.data(), dgi.data(), w_ih->data.data(), sB, 3 * sH, sI);
          for (int64_t b = 0; b < B; ++b)
            k.axpy(x->grad.data() + (b * T + t) * I, 1.0, dxt.data() + b * I, sI);
        }
        if (gwi) k.gemm_tn(w_ih->grad.data(), dgi.data(), xt.data(), 3 * sH, sB, sI);
        if (gbi)
          for (int64_t b = 0; b < B; ++b)
            k.axpy(b_ih->grad.data(), 1.0, dgi.data() + b * 3 * H, 3 * sH);
        if (gwh) k.gemm_tn(w_hh->grad.data(), dgh.data(), hprev.data(), 3 * sH, sB, sH);
        if (gbh)
          for (int64_t b = 0; b < B; ++b)
            k.axpy(b_hh->grad.data(), 1.0, dgh.data() + b * 3 * H, 3 * sH);

        std::copy(dhp.begin(), dhp.end(), dh_next.begin());
        k.gemm_nn(dh_next.data(), dgh.data(), w_hh->data.data(), sB, 3 * sH, sH);
      }
    });
  }
  return out;
}

}  // namespace phasor::ops

// Copyright 2026 the phasor authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "phasor/hadf.hpp"

namespace phasor::nn {

namespace o = phasor::ops;

SeqPair hybrid_attention(const SeqPair& z, const HadfParams& p, AttentionExport* export_out) {
  const auto& cfg = p.cfg;
  if (z.mag->shape.rank != 3 || z.pha.re->shape.rank != 3)
    throw ShapeError("hybrid_attention wants [batch, len, channels] sequences");
  const int64_t len = z.mag->shape[1];
  if (len < 1) throw ShapeError("hybrid_attention: empty sequence");
  if (z.mag->shape[2] != cfg.c_mag || z.pha.re->shape[2] != cfg.c_pha)
    throw ShapeError("hybrid_attention channel mismatch: " + z.mag->shape.str() + " / " +
                     z.pha.re->shape.str());

  const double inv_scale =
      1.0 / std::sqrt(static_cast<double>(cfg.c_mag_head + 2 * cfg.c_pha_head));
  if (export_out) {
    export_out->heads = cfg.n_heads;
    export_out->len = len;
    export_out->score.assign(static_cast<size_t>(cfg.n_heads * len * len), 0.0);
    export_out->mag_part.assign(static_cast<size_t>(cfg.n_heads * len * len), 0.0);
    export_out->pha_part.assign(static_cast<size_t>(cfg.n_heads * len * len), 0.0);
  }

  std::vector<TensorPtr> heads_mag, heads_pre, heads_pim;
  for (int64_t h = 0; h < cfg.n_heads; ++h) {
    auto hi = static_cast<size_t>(h);
    auto qm = o::matmul(z.mag, p.wq_mag[hi]);
    auto km = o::matmul(z.mag, p.wk_mag[hi]);
    auto vm = o::matmul(z.mag, p.wv_mag[hi]);
    auto qp = o::cmatmul(z.pha, p.wq_pha[hi]);
    auto kp = o::cmatmul(z.pha, p.wk_pha[hi]);
    auto vp = o::cmatmul(z.pha, p.wv_pha[hi]);
    if (cfg.break_attn) qp.re = o::neg(qp.re);

    // fused logits: (Qm Km^T + Re(Qp) Re(Kp)^T + Im(Qp) Im(Kp)^T) / sqrt(dk).
    // The two phase products add up to Re(Qp Kp^H), which is what makes the
    // scores blind to a global rotation.
    auto logit_mag = o::scale(o::bmm(qm, km, true), inv_scale);
    auto logit_pha = o::scale(
        o::add(o::bmm(qp.re, kp.re, true), o::bmm(qp.im, kp.im, true)), inv_scale);
    auto scores = o::softmax_lastdim(o::add(logit_mag, logit_pha));

    if (export_out) {
      for (int64_t r = 0; r < len; ++r)
        for (int64_t c = 0; c < len; ++c) {
          size_t idx = static_cast<size_t>((h * len + r) * len + c);
          export_out->score[idx] = scores->cat(0, r, c);
          export_out->mag_part[idx] = logit_mag->cat(0, r, c);
          export_out->pha_part[idx] = logit_pha->cat(0, r, c);
        }
    }

    heads_mag.push_back(o::bmm(scores, vm, false));
    heads_pre.push_back(o::bmm(scores, vp.re, false));
    heads_pim.push_back(o::bmm(scores, vp.im, false));
  }

  SeqPair out;
  auto cat_mag = o::concat_dim(heads_mag, 2);
  out.mag = o::add(o::matmul(cat_mag, p.wo_mag), p.bo_mag);
  CTensor cat_pha{o::concat_dim(heads_pre, 2), o::concat_dim(heads_pim, 2)};
  out.pha = o::cmatmul(cat_pha, p.wo_pha);
  return out;
}

}  // namespace phasor::nn

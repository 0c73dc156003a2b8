// Copyright 2026 the phasor authors
// SPDX-License-Identifier: Apache-2.0

#include "phasor/ops.hpp"

#include <algorithm>
#include <cmath>

#include "phasor/kernels.hpp"

namespace phasor::ops {

namespace {

bool want_tape(std::initializer_list<TensorPtr> ins) {
  if (!Tape::current()) return false;
  for (const auto& p : ins)
    if (p && p->requires_grad) return true;
  return false;
}

// Broadcast plan: shapes right-aligned into fixed rank-4 index space with
// front padding; stride 0 marks broadcast dims.
struct BcPlan {
  std::array<int64_t, 4> od{1, 1, 1, 1};
  std::array<int64_t, 4> sa{0, 0, 0, 0};
  std::array<int64_t, 4> sb{0, 0, 0, 0};
  Shape out_shape;
  bool same = false;
};

void align_strides(const Shape& s, const std::array<int64_t, 4>& od,
                   std::array<int64_t, 4>& out) {
  auto native = s.strides();
  int off = 4 - s.rank;
  for (int j = 0; j < s.rank; ++j) {
    int64_t dim = s[j];
    int ai = off + j;
    out[static_cast<size_t>(ai)] =
        (dim == 1 && od[static_cast<size_t>(ai)] > 1) ? 0 : native[static_cast<size_t>(j)];
  }
}

BcPlan make_bc(const Shape& a, const Shape& b) {
  BcPlan p;
  if (a == b) {
    p.same = true;
    p.out_shape = a;
    return p;
  }
  int rank = std::max(a.rank, b.rank);
  std::array<int64_t, 4> ad{1, 1, 1, 1}, bd{1, 1, 1, 1};
  for (int j = 0; j < a.rank; ++j) ad[static_cast<size_t>(4 - a.rank + j)] = a[j];
  for (int j = 0; j < b.rank; ++j) bd[static_cast<size_t>(4 - b.rank + j)] = b[j];
  Shape out;
  out.rank = rank;
  for (int i = 0; i < 4; ++i) {
    int64_t da = ad[static_cast<size_t>(i)], db = bd[static_cast<size_t>(i)];
    if (da != db && da != 1 && db != 1)
      throw ShapeError("cannot broadcast " + a.str() + " with " + b.str());
    p.od[static_cast<size_t>(i)] = std::max(da, db);
  }
  for (int i = 0; i < rank; ++i) out[i] = p.od[static_cast<size_t>(4 - rank + i)];
  p.out_shape = out;
  align_strides(a, p.od, p.sa);
  align_strides(b, p.od, p.sb);
  return p;
}

template <class F>
void bc_loop(const BcPlan& p, F f) {
  int64_t oi = 0;
  for (int64_t i0 = 0; i0 < p.od[0]; ++i0)
    for (int64_t i1 = 0; i1 < p.od[1]; ++i1)
      for (int64_t i2 = 0; i2 < p.od[2]; ++i2) {
        int64_t ba = i0 * p.sa[0] + i1 * p.sa[1] + i2 * p.sa[2];
        int64_t bb = i0 * p.sb[0] + i1 * p.sb[1] + i2 * p.sb[2];
        for (int64_t i3 = 0; i3 < p.od[3]; ++i3, ++oi)
          f(static_cast<size_t>(oi), static_cast<size_t>(ba + i3 * p.sa[3]),
            static_cast<size_t>(bb + i3 * p.sb[3]));
      }
}

enum class BinKind { Add, Sub, Mul, Div };

TensorPtr binary_op(const TensorPtr& a, const TensorPtr& b, BinKind kind) {
  BcPlan p = make_bc(a->shape, b->shape);
  auto out = std::make_shared<Tensor>(p.out_shape);
  const auto& k = kernels::active();
  const size_t n = out->data.size();
  if (p.same) {
    switch (kind) {
      case BinKind::Add: k.add(out->data.data(), a->data.data(), b->data.data(), n); break;
      case BinKind::Sub: k.sub(out->data.data(), a->data.data(), b->data.data(), n); break;
      case BinKind::Mul: k.mul(out->data.data(), a->data.data(), b->data.data(), n); break;
      case BinKind::Div:
        for (size_t i = 0; i < n; ++i) out->data[i] = a->data[i] / b->data[i];
        break;
    }
  } else {
    switch (kind) {
      case BinKind::Add:
        bc_loop(p, [&](size_t oi, size_t ai, size_t bi) { out->data[oi] = a->data[ai] + b->data[bi]; });
        break;
      case BinKind::Sub:
        bc_loop(p, [&](size_t oi, size_t ai, size_t bi) { out->data[oi] = a->data[ai] - b->data[bi]; });
        break;
      case BinKind::Mul:
        bc_loop(p, [&](size_t oi, size_t ai, size_t bi) { out->data[oi] = a->data[ai] * b->data[bi]; });
        break;
      case BinKind::Div:
        bc_loop(p, [&](size_t oi, size_t ai, size_t bi) { out->data[oi] = a->data[ai] / b->data[bi]; });
        break;
    }
  }
  if (want_tape({a, b})) {
    out->requires_grad = true;
    Tape::current()->push([a, b, out, p, kind] {
      out->ensure_grad();
      const auto& k = kernels::active();
      const size_t n = out->data.size();
      const double* go = out->grad.data();
      if (a->requires_grad) {
        a->ensure_grad();
        double* ga = a->grad.data();
        switch (kind) {
          case BinKind::Add:
          case BinKind::Sub:
            if (p.same) k.axpy(ga, 1.0, go, n);
            else bc_loop(p, [&](size_t oi, size_t ai, size_t) { ga[ai] += go[oi]; });
            break;
          case BinKind::Mul:
            if (p.same) k.macc(ga, go, b->data.data(), n);
            else bc_loop(p, [&](size_t oi, size_t ai, size_t bi) { ga[ai] += go[oi] * b->data[bi]; });
            break;
          case BinKind::Div:
            bc_loop(p, [&](size_t oi, size_t ai, size_t bi) { ga[ai] += go[oi] / b->data[bi]; });
            break;
        }
      }
      if (b->requires_grad) {
        b->ensure_grad();
        double* gb = b->grad.data();
        switch (kind) {
          case BinKind::Add:
            if (p.same) k.axpy(gb, 1.0, go, n);
            else bc_loop(p, [&](size_t oi, size_t, size_t bi) { gb[bi] += go[oi]; });
            break;
          case BinKind::Sub:
            if (p.same) k.axpy(gb, -1.0, go, n);
            else bc_loop(p, [&](size_t oi, size_t, size_t bi) { gb[bi] -= go[oi]; });
            break;
          case BinKind::Mul:
            if (p.same) k.macc(gb, go, a->data.data(), n);
            else bc_loop(p, [&](size_t oi, size_t ai, size_t bi) { gb[bi] += go[oi] * a->data[ai]; });
            break;
          case BinKind::Div:
            bc_loop(p, [&](size_t oi, size_t ai, size_t bi) {
              double bv = b->data[bi];
              gb[bi] -= go[oi] * a->data[ai] / (bv * bv);
            });
            break;
        }
      }
    });
  }
  return out;
}

template <class F, class G>
TensorPtr unary_op(const TensorPtr& a, F fwd, G dfdx) {
  auto out = std::make_shared<Tensor>(a->shape);
  const size_t n = a->data.size();
  for (size_t i = 0; i < n; ++i) out->data[i] = fwd(a->data[i]);
  if (want_tape({a})) {
    out->requires_grad = true;
    Tape::current()->push([a, out, dfdx] {
      a->ensure_grad();
      out->ensure_grad();
      const size_t n = a->data.size();
      for (size_t i = 0; i < n; ++i)
        a->grad[i] += out->grad[i] * dfdx(a->data[i], out->data[i]);
    });
  }
  return out;
}

double sigmoid_s(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct ReducePlan {
  std::array<int64_t, 4> ad{1, 1, 1, 1};
  std::array<int64_t, 4> os{0, 0, 0, 0};
  Shape out_shape;
  double inv_count = 1.0;
};

ReducePlan make_reduce(const Shape& a, const std::vector<int>& dims, bool keepdims) {
  ReducePlan p;
  std::array<bool, 4> red{false, false, false, false};
  int64_t count = 1;
  for (int dim : dims) {
    if (dim < 0 || dim >= a.rank)
      throw ShapeError("reduce dim " + std::to_string(dim) + " out of range for " + a.str());
    size_t ai = static_cast<size_t>(4 - a.rank + dim);
    if (!red[ai]) count *= a[dim];
    red[ai] = true;
  }
  for (int j = 0; j < a.rank; ++j) p.ad[static_cast<size_t>(4 - a.rank + j)] = a[j];
  Shape out;
  if (keepdims) {
    out.rank = a.rank;
    for (int j = 0; j < a.rank; ++j)
      out[j] = red[static_cast<size_t>(4 - a.rank + j)] ? 1 : a[j];
  } else {
    std::vector<int64_t> left;
    for (int j = 0; j < a.rank; ++j)
      if (!red[static_cast<size_t>(4 - a.rank + j)]) left.push_back(a[j]);
    if (left.empty()) left.push_back(1);
    out.rank = static_cast<int>(left.size());
    for (size_t j = 0; j < left.size(); ++j) out[static_cast<int>(j)] = left[j];
  }
  p.out_shape = out;
  int64_t acc = 1;
  for (int i = 3; i >= 0; --i) {
    if (!red[static_cast<size_t>(i)]) {
      p.os[static_cast<size_t>(i)] = acc;
      acc *= p.ad[static_cast<size_t>(i)];
    }
  }
  p.inv_count = 1.0 / static_cast<double>(count);
  return p;
}

template <class F>
void reduce_loop(const ReducePlan& p, F f) {
  int64_t ai = 0;
  for (int64_t i0 = 0; i0 < p.ad[0]; ++i0)
    for (int64_t i1 = 0; i1 < p.ad[1]; ++i1)
      for (int64_t i2 = 0; i2 < p.ad[2]; ++i2) {
        int64_t base = i0 * p.os[0] + i1 * p.os[1] + i2 * p.os[2];
        for (int64_t i3 = 0; i3 < p.ad[3]; ++i3, ++ai)
          f(static_cast<size_t>(ai), static_cast<size_t>(base + i3 * p.os[3]));
      }
}

TensorPtr reduce_impl(const TensorPtr& a, const std::vector<int>& dims, bool keepdims,
                      bool mean) {
  ReducePlan p = make_reduce(a->shape, dims, keepdims);
  auto out = std::make_shared<Tensor>(p.out_shape);
  reduce_loop(p, [&](size_t ai, size_t oi) { out->data[oi] += a->data[ai]; });
  const double w = mean ? p.inv_count : 1.0;
  if (mean)
    for (auto& v : out->data) v *= w;
  if (want_tape({a})) {
    out->requires_grad = true;
    Tape::current()->push([a, out, p, w] {
      a->ensure_grad();
      out->ensure_grad();
      reduce_loop(p, [&](size_t ai, size_t oi) { a->grad[ai] += w * out->grad[oi]; });
    });
  }
  return out;
}

std::vector<int> all_dims(const Shape& s) {
  std::vector<int> d(static_cast<size_t>(s.rank));
  for (int i = 0; i < s.rank; ++i) d[static_cast<size_t>(i)] = i;
  return d;
}

}  // namespace

TensorPtr add(const TensorPtr& a, const TensorPtr& b) { return binary_op(a, b, BinKind::Add); }
TensorPtr sub(const TensorPtr& a, const TensorPtr& b) { return binary_op(a, b, BinKind::Sub); }
TensorPtr mul(const TensorPtr& a, const TensorPtr& b) { return binary_op(a, b, BinKind::Mul); }

TensorPtr div(const TensorPtr& a, const TensorPtr& b) {
  if (a->shape == b->shape) {
    auto out = std::make_shared<Tensor>(a->shape);
    const size_t n = out->data.size();
    for (size_t i = 0; i < n; ++i) out->data[i] = a->data[i] / b->data[i];
    if (want_tape({a, b})) {
      out->requires_grad = true;
      Tape::current()->push([a, b, out] {
        out->ensure_grad();
        const size_t n = out->data.size();
        if (a->requires_grad) {
          a->ensure_grad();
          for (size_t i = 0; i < n; ++i) a->grad[i] += out->grad[i] / b->data[i];
        }
        if (b->requires_grad) {
          b->ensure_grad();
          for (size_t i = 0; i < n; ++i) {
            double bv = b->data[i];
            b->grad[i] -= out->grad[i] * a->data[i] / (bv * bv);
          }
        }
      });
    }
    return out;
  }
  return binary_op(a, b, BinKind::Div);
}

TensorPtr scale(const TensorPtr& a, double c) {
  auto out = std::make_shared<Tensor>(a->shape);
  kernels::active().scale(out->data.data(), a->data.data(), c, a->data.size());
  if (want_tape({a})) {
    out->requires_grad = true;
    Tape::current()->push([a, out, c] {
      a->ensure_grad();
      out->ensure_grad();
      kernels::active().axpy(a->grad.data(), c, out->grad.data(), a->grad.size());
    });
  }
  return out;
}

TensorPtr add_const(const TensorPtr& a, double c) {
  return unary_op(a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

TensorPtr neg(const TensorPtr& a) { return scale(a, -1.0); }

TensorPtr sigmoid(const TensorPtr& a) {
  return unary_op(a, [](double x) { return sigmoid_s(x); },
                  [](double, double y) { return y * (1.0 - y); });
}

TensorPtr tanh_op(const TensorPtr& a) {
  return unary_op(a, [](double x) { return std::tanh(x); },
                  [](double, double y) { return 1.0 - y * y; });
}

TensorPtr silu(const TensorPtr& a) {
  return unary_op(a, [](double x) { return x * sigmoid_s(x); },
                  [](double x, double) {
                    double s = sigmoid_s(x);
                    return s + x * s * (1.0 - s);
                  });
}

TensorPtr relu(const TensorPtr& a) {
  return unary_op(a, [](double x) { return x > 0.0 ? x : 0.0; },
                  [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

TensorPtr sqrt_op(const TensorPtr& a) {
  return unary_op(a, [](double x) { return std::sqrt(x); },
                  [](double, double y) { return y > 0.0 ? 0.5 / y : 0.0; });
}

TensorPtr pow_const(const TensorPtr& a, double p) {
  return unary_op(a, [p](double x) { return std::pow(x, p); },
                  [p](double x, double) { return x != 0.0 ? p * std::pow(x, p - 1.0) : 0.0; });
}

TensorPtr abs_op(const TensorPtr& a) {
  return unary_op(a, [](double x) { return std::abs(x); },
                  [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

TensorPtr anti_wrap(const TensorPtr& a) {
  return unary_op(a, [](double x) { return anti_wrap_scalar(x); },
                  [](double x, double) {
                    double w = x - kTwoPi * std::round(x / kTwoPi);
                    return w > 0.0 ? 1.0 : (w < 0.0 ? -1.0 : 0.0);
                  });
}

TensorPtr atan2_op(const TensorPtr& y, const TensorPtr& x) {
  if (y->shape != x->shape)
    throw ShapeError("atan2 needs matching shapes, got " + y->shape.str() + " vs " +
                     x->shape.str());
  auto out = std::make_shared<Tensor>(y->shape);
  const size_t n = y->data.size();
  for (size_t i = 0; i < n; ++i) out->data[i] = std::atan2(y->data[i], x->data[i]);
  if (want_tape({y, x})) {
    out->requires_grad = true;
    Tape::current()->push([y, x, out] {
      out->ensure_grad();
      const size_t n = y->data.size();
      for (size_t i = 0; i < n; ++i) {
        double yv = y->data[i], xv = x->data[i];
        double r2 = xv * xv + yv * yv;
        if (r2 == 0.0) continue;
        double g = out->grad[i];
        if (y->requires_grad) {
          y->ensure_grad();
          y->grad[i] += g * xv / r2;
        }
        if (x->requires_grad) {
          x->ensure_grad();
          x->grad[i] -= g * yv / r2;
        }
      }
    });
  }
  return out;
}

TensorPtr modulus(const TensorPtr& re, const TensorPtr& im) {
  if (re->shape != im->shape)
    throw ShapeError("modulus needs matching shapes, got " + re->shape.str() + " vs " +
                     im->shape.str());
  auto out = std::make_shared<Tensor>(re->shape);
  const size_t n = re->data.size();
  for (size_t i = 0; i < n; ++i) out->data[i] = std::hypot(re->data[i], im->data[i]);
  if (want_tape({re, im})) {
    out->requires_grad = true;
    Tape::current()->push([re, im, out] {
      out->ensure_grad();
      const size_t n = re->data.size();
      for (size_t i = 0; i < n; ++i) {
        double m = out->data[i];
        if (m <= 0.0) continue;
        double g = out->grad[i] / m;
        if (re->requires_grad) {
          re->ensure_grad();
          re->grad[i] += g * re->data[i];
        }
        if (im->requires_grad) {
          im->ensure_grad();
          im->grad[i] += g * im->data[i];
        }
      }
    });
  }
  return out;
}

TensorPtr reduce_sum(const TensorPtr& a, const std::vector<int>& dims, bool keepdims) {
  return reduce_impl(a, dims, keepdims, false);
}

TensorPtr reduce_mean(const TensorPtr& a, const std::vector<int>& dims, bool keepdims) {
  return reduce_impl(a, dims, keepdims, true);
}

TensorPtr sum_all(const TensorPtr& a) { return reduce_impl(a, all_dims(a->shape), false, false); }

TensorPtr mean_all(const TensorPtr& a) { return reduce_impl(a, all_dims(a->shape), false, true); }

TensorPtr matmul(const TensorPtr& a, const TensorPtr& w) {
  if (a->shape.rank < 2 || w->shape.rank != 2)
    throw ShapeError("matmul wants a rank>=2 and w rank 2, got " + a->shape.str() + " and " +
                     w->shape.str());
  const int64_t K = a->shape[a->shape.rank - 1];
  const int64_t M = w->shape[1];
  if (w->shape[0] != K)
    throw ShapeError("matmul inner mismatch: " + a->shape.str() + " vs " + w->shape.str());
  const int64_t R = a->numel() / K;
  Shape os = a->shape;
  os[os.rank - 1] = M;
  auto out = std::make_shared<Tensor>(os);
  const auto& k = kernels::active();
  k.gemm_nn(out->data.data(), a->data.data(), w->data.data(), static_cast<size_t>(R),
            static_cast<size_t>(K), static_cast<size_t>(M));
  if (want_tape({a, w})) {
    out->requires_grad = true;
    Tape::current()->push([a, w, out, R, K, M] {
      out->ensure_grad();
      const auto& k = kernels::active();
      if (a->requires_grad) {
        a->ensure_grad();
        k.gemm_nt(a->grad.data(), out->grad.data(), w->data.data(), static_cast<size_t>(R),
                  static_cast<size_t>(M), static_cast<size_t>(K));
      }
      if (w->requires_grad) {
        w->ensure_grad();
        k.gemm_tn(w->grad.data(), a->data.data(), out->grad.data(), static_cast<size_t>(K),
                  static_cast<size_t>(R), static_cast<size_t>(M));
      }
    });
  }
  return out;
}

TensorPtr bmm(const TensorPtr& a, const TensorPtr& b, bool trans_b) {
  if (a->shape.rank != 3 || b->shape.rank != 3)
    throw ShapeError("bmm wants rank-3 inputs, got " + a->shape.str() + " and " +
                     b->shape.str());
  const int64_t B = a->shape[0], L = a->shape[1], K = a->shape[2];
  const int64_t M = trans_b ? b->shape[1] : b->shape[2];
  const int64_t bk = trans_b ? b->shape[2] : b->shape[1];
  if (b->shape[0] != B || bk != K)
    throw ShapeError("bmm mismatch: " + a->shape.str() + " vs " + b->shape.str() +
                     (trans_b ? " (trans_b)" : ""));
  auto out = std::make_shared<Tensor>(Shape{B, L, M});
  const auto& k = kernels::active();
  const size_t sl = static_cast<size_t>(L), sk = static_cast<size_t>(K),
               sm = static_cast<size_t>(M);
  for (int64_t i = 0; i < B; ++i) {
    const double* ai = a->data.data() + i * L * K;
    const double* bi = b->data.data() + i * K * M;
    double* oi = out->data.data() + i * L * M;
    if (trans_b) k.gemm_nt(oi, ai, bi, sl, sk, sm);
    else k.gemm_nn(oi, ai, bi, sl, sk, sm);
  }
  if (want_tape({a, b})) {
    out->requires_grad = true;
    Tape::current()->push([a, b, out, B, L, K, M, trans_b] {
      out->ensure_grad();
      const auto& k = kernels::active();
      const size_t sl = static_cast<size_t>(L), sk = static_cast<size_t>(K),
                   sm = static_cast<size_t>(M);
      for (int64_t i = 0; i < B; ++i) {
        const double* ai = a->data.data() + i * L * K;
        const double* bi = b->data.data() + i * K * M;
        const double* gi = out->grad.data() + i * L * M;
        if (a->requires_grad) {
          a->ensure_grad();
          double* gai = a->grad.data() + i * L * K;
          if (trans_b) k.gemm_nn(gai, gi, bi, sl, sm, sk);  // dA += dOut * B
          else k.gemm_nt(gai, gi, bi, sl, sm, sk);          // dA += dOut * B^T
        }
        if (b->requires_grad) {
          b->ensure_grad();
          double* gbi = b->grad.data() + i * K * M;
          if (trans_b) k.gemm_tn(gbi, gi, ai, sm, sl, sk);  // dB += dOut^T * A
          else k.gemm_tn(gbi, ai, gi, sk, sl, sm);          // dB += A^T * dOut
        }
      }
    });
  }
  return out;
}

TensorPtr softmax_lastdim(const TensorPtr& a) {
  const int64_t n = a->shape[a->shape.rank - 1];
  const int64_t rows = a->numel() / n;
  auto out = std::make_shared<Tensor>(a->shape);
  for (int64_t r = 0; r < rows; ++r) {
    const double* x = a->data.data() + r * n;
    double* y = out->data.data() + r * n;
    double mx = x[0];
    for (int64_t i = 1; i < n; ++i) mx = std::max(mx, x[i]);
    double s = 0.0;
    for (int64_t i = 0; i < n; ++i) s += (y[i] = std::exp(x[i] - mx));
    double inv = 1.0 / s;
    for (int64_t i = 0; i < n; ++i) y[i] *= inv;
  }
  if (want_tape({a})) {
    out->requires_grad = true;
    Tape::current()->push([a, out, rows, n] {
      a->ensure_grad();
      out->ensure_grad();
      for (int64_t r = 0; r < rows; ++r) {
        const double* y = out->data.data() + r * n;
        const double* go = out->grad.data() + r * n;
        double* ga = a->grad.data() + r * n;
        double dot = 0.0;
        for (int64_t i = 0; i < n; ++i) dot += go[i] * y[i];
        for (int64_t i = 0; i < n; ++i) ga[i] += y[i] * (go[i] - dot);
      }
    });
  }
  return out;
}

TensorPtr slice_dim(const TensorPtr& a, int dim, int64_t start, int64_t len) {
  if (dim < 0 || dim >= a->shape.rank)
    throw ShapeError("slice dim " + std::to_string(dim) + " out of range for " +
                     a->shape.str());
  if (start < 0 || len < 0 || start + len > a->shape[dim])
    throw ShapeError("slice [" + std::to_string(start) + "," + std::to_string(start + len) +
                     ") out of range for " + a->shape.str());
  Shape os = a->shape;
  os[dim] = len;
  auto out = std::make_shared<Tensor>(os);
  auto as = a->shape.strides();
  const int64_t off = start * as[static_cast<size_t>(dim)];
  // iterate out coords, add start along dim
  std::array<int64_t, 4> od{1, 1, 1, 1};
  for (int j = 0; j < os.rank; ++j) od[static_cast<size_t>(j)] = os[j];
  std::array<int64_t, 4> sa{0, 0, 0, 0};
  for (int j = 0; j < a->shape.rank; ++j) sa[static_cast<size_t>(j)] = as[static_cast<size_t>(j)];
  int64_t oi = 0;
  for (int64_t i0 = 0; i0 < od[0]; ++i0)
    for (int64_t i1 = 0; i1 < od[1]; ++i1)
      for (int64_t i2 = 0; i2 < od[2]; ++i2) {
        int64_t base = off + i0 * sa[0] + i1 * sa[1] + i2 * sa[2];
        for (int64_t i3 = 0; i3 < od[3]; ++i3, ++oi)
          out->data[static_cast<size_t>(oi)] = a->data[static_cast<size_t>(base + i3 * sa[3])];
      }
  if (want_tape({a})) {
    out->requires_grad = true;
    Tape::current()->push([a, out, od, sa, off] {
      a->ensure_grad();
      out->ensure_grad();
      int64_t oi = 0;
      for (int64_t i0 = 0; i0 < od[0]; ++i0)
        for (int64_t i1 = 0; i1 < od[1]; ++i1)
          for (int64_t i2 = 0; i2 < od[2]; ++i2) {
            int64_t base = off + i0 * sa[0] + i1 * sa[1] + i2 * sa[2];
            for (int64_t i3 = 0; i3 < od[3]; ++i3, ++oi)
              a->grad[static_cast<size_t>(base + i3 * sa[3])] +=
                  out->grad[static_cast<size_t>(oi)];
          }
    });
  }
  return out;
}

TensorPtr concat_dim(const std::vector<TensorPtr>& xs, int dim) {
  if (xs.empty()) throw ValueError("concat of zero tensors");
  Shape os = xs[0]->shape;
  if (dim < 0 || dim >= os.rank)
    throw ShapeError("concat dim " + std::to_string(dim) + " out of range for " + os.str());
  int64_t total = 0;
  for (const auto& x : xs) {
    if (x->shape.rank != os.rank)
      throw ShapeError("concat rank mismatch: " + os.str() + " vs " + x->shape.str());
    for (int j = 0; j < os.rank; ++j)
      if (j != dim && x->shape[j] != os[j])
        throw ShapeError("concat shape mismatch: " + xs[0]->shape.str() + " vs " +
                         x->shape.str());
    total += x->shape[dim];
  }
  os[dim] = total;
  auto out = std::make_shared<Tensor>(os);
  auto ostr = os.strides();
  // outer = product of dims before `dim`; copy runs of rows
  int64_t outer = 1;
  for (int j = 0; j < dim; ++j) outer *= os[j];
  const int64_t row = ostr[static_cast<size_t>(dim)];  // elements per index step along dim
  int64_t offset = 0;
  bool taped = false;
  for (const auto& x : xs)
    if (x->requires_grad) taped = true;
  taped = taped && Tape::current() != nullptr;
  for (const auto& x : xs) {
    const int64_t xd = x->shape[dim];
    const int64_t chunk = xd * row;
    for (int64_t o = 0; o < outer; ++o) {
      const double* srcp = x->data.data() + o * chunk;
      double* dstp = out->data.data() + o * total * row + offset * row;
      std::copy(srcp, srcp + chunk, dstp);
    }
    offset += xd;
  }
  if (taped) {
    out->requires_grad = true;
    Tape::current()->push([xs, out, outer, total, row, dim] {
      out->ensure_grad();
      int64_t offset = 0;
      for (const auto& x : xs) {
        const int64_t xd = x->shape[dim];
        const int64_t chunk = xd * row;
        if (x->requires_grad) {
          x->ensure_grad();
          for (int64_t o = 0; o < outer; ++o) {
            const double* gsrc = out->grad.data() + o * total * row + offset * row;
            double* gdst = x->grad.data() + o * chunk;
            kernels::active().axpy(gdst, 1.0, gsrc, static_cast<size_t>(chunk));
          }
        }
        offset += xd;
      }
    });
  }
  return out;
}

TensorPtr permute(const TensorPtr& a, const std::vector<int>& perm) {
  const int rank = a->shape.rank;
  if (static_cast<int>(perm.size()) != rank)
    throw ShapeError("permute arity " + std::to_string(perm.size()) + " for " + a->shape.str());
  std::array<bool, 4> seen{false, false, false, false};
  for (int v : perm) {
    if (v < 0 || v >= rank || seen[static_cast<size_t>(v)])
      throw ShapeError("invalid permutation for " + a->shape.str());
    seen[static_cast<size_t>(v)] = true;
  }
  Shape os;
  os.rank = rank;
  for (int i = 0; i < rank; ++i) os[i] = a->shape[perm[static_cast<size_t>(i)]];
  auto out = std::make_shared<Tensor>(os);
  auto as = a->shape.strides();
  std::array<int64_t, 4> od{1, 1, 1, 1}, sa{0, 0, 0, 0};
  for (int i = 0; i < rank; ++i) {
    od[static_cast<size_t>(i)] = os[i];
    sa[static_cast<size_t>(i)] = as[static_cast<size_t>(perm[static_cast<size_t>(i)])];
  }
  int64_t oi = 0;
  for (int64_t i0 = 0; i0 < od[0]; ++i0)
    for (int64_t i1 = 0; i1 < od[1]; ++i1)
      for (int64_t i2 = 0; i2 < od[2]; ++i2) {
        int64_t base = i0 * sa[0] + i1 * sa[1] + i2 * sa[2];
        for (int64_t i3 = 0; i3 < od[3]; ++i3, ++oi)
          out->data[static_cast<size_t>(oi)] = a->data[static_cast<size_t>(base + i3 * sa[3])];
      }
  if (want_tape({a})) {
    out->requires_grad = true;
    Tape::current()->push([a, out, od, sa] {
      a->ensure_grad();
      out->ensure_grad();
      int64_t oi = 0;
      for (int64_t i0 = 0; i0 < od[0]; ++i0)
        for (int64_t i1 = 0; i1 < od[1]; ++i1)
          for (int64_t i2 = 0; i2 < od[2]; ++i2) {
            int64_t base = i0 * sa[0] + i1 * sa[1] + i2 * sa[2];
            for (int64_t i3 = 0; i3 < od[3]; ++i3, ++oi)
              a->grad[static_cast<size_t>(base + i3 * sa[3])] +=
                  out->grad[static_cast<size_t>(oi)];
          }
    });
  }
  return out;
}

TensorPtr reshape(const TensorPtr& a, const Shape& s) {
  if (s.numel() != a->numel())
    throw ShapeError("reshape " + a->shape.str() + " -> " + s.str() + " changes element count");
  auto out = std::make_shared<Tensor>(s);
  out->data = a->data;
  if (want_tape({a})) {
    out->requires_grad = true;
    Tape::current()->push([a, out] {
      a->ensure_grad();
      out->ensure_grad();
      kernels::active().axpy(a->grad.data(), 1.0, out->grad.data(), a->grad.size());
    });
  }
  return out;
}

TensorPtr frame_signal(const TensorPtr& x, int64_t win, int64_t hop) {
  if (x->shape.rank != 1) throw ShapeError("frame_signal wants rank 1, got " + x->shape.str());
  const int64_t n = x->shape[0];
  if (n < win) throw ShapeError("signal shorter than window");
  const int64_t T = (n - win) / hop + 1;
  auto out = std::make_shared<Tensor>(Shape{T, win});
  for (int64_t t = 0; t < T; ++t)
    std::copy(x->data.begin() + t * hop, x->data.begin() + t * hop + win,
              out->data.begin() + t * win);
  if (want_tape({x})) {
    out->requires_grad = true;
    Tape::current()->push([x, out, T, win, hop] {
      x->ensure_grad();
      out->ensure_grad();
      for (int64_t t = 0; t < T; ++t)
        kernels::active().axpy(x->grad.data() + t * hop, 1.0, out->grad.data() + t * win,
                               static_cast<size_t>(win));
    });
  }
  return out;
}

TensorPtr overlap_add(const TensorPtr& frames, int64_t hop, int64_t out_len) {
  if (frames->shape.rank != 2)
    throw ShapeError("overlap_add wants rank 2, got " + frames->shape.str());
  const int64_t T = frames->shape[0], win = frames->shape[1];
  if ((T - 1) * hop + win > out_len)
    throw ShapeError("overlap_add frames overrun output length");
  auto out = std::make_shared<Tensor>(Shape{out_len});
  for (int64_t t = 0; t < T; ++t)
    kernels::active().axpy(out->data.data() + t * hop, 1.0, frames->data.data() + t * win,
                           static_cast<size_t>(win));
  if (want_tape({frames})) {
    out->requires_grad = true;
    Tape::current()->push([frames, out, T, win, hop] {
      frames->ensure_grad();
      out->ensure_grad();
      for (int64_t t = 0; t < T; ++t)
        kernels::active().axpy(frames->grad.data() + t * win, 1.0,
                               out->grad.data() + t * hop, static_cast<size_t>(win));
    });
  }
  return out;
}

CTensor cadd(const CTensor& a, const CTensor& b) { return {add(a.re, b.re), add(a.im, b.im)}; }

CTensor csub(const CTensor& a, const CTensor& b) { return {sub(a.re, b.re), sub(a.im, b.im)}; }

CTensor cmul(const CTensor& a, const CTensor& b) {
  return {sub(mul(a.re, b.re), mul(a.im, b.im)), add(mul(a.re, b.im), mul(a.im, b.re))};
}

CTensor cscale(const CTensor& a, double c) { return {scale(a.re, c), scale(a.im, c)}; }

CTensor conj(const CTensor& a) { return {a.re, neg(a.im)}; }

CTensor cmatmul(const CTensor& a, const CTensor& w) {
  return {sub(matmul(a.re, w.re), matmul(a.im, w.im)),
          add(matmul(a.re, w.im), matmul(a.im, w.re))};
}

TensorPtr cmodulus(const CTensor& a) { return modulus(a.re, a.im); }

CTensor cnormalize(const CTensor& z, double floor) {
  if (z.re->shape != z.im->shape)
    throw ShapeError("cnormalize needs matching shapes, got " + z.re->shape.str() + " vs " +
                     z.im->shape.str());
  auto re = z.re, im = z.im;
  auto ure = std::make_shared<Tensor>(re->shape);
  auto uim = std::make_shared<Tensor>(im->shape);
  const size_t n = re->data.size();
  for (size_t i = 0; i < n; ++i) {
    double m = std::hypot(re->data[i], im->data[i]);
    if (m < floor) {
      ure->data[i] = 1.0;
      uim->data[i] = 0.0;
    } else {
      ure->data[i] = re->data[i] / m;
      uim->data[i] = im->data[i] / m;
    }
  }
  if (want_tape({re, im})) {
    ure->requires_grad = true;
    uim->requires_grad = true;
    Tape::current()->push([re, im, ure, uim, floor] {
      ure->ensure_grad();
      uim->ensure_grad();
      const size_t n = re->data.size();
      for (size_t i = 0; i < n; ++i) {
        double a = re->data[i], b = im->data[i];
        double m = std::hypot(a, b);
        if (m < floor) continue;
        // d(a/m)/da = b^2/m^3 etc; only the tangential component survives.
        double m3 = m * m * m;
        double gu = ure->grad[i], gv = uim->grad[i];
        if (re->requires_grad) {
          re->ensure_grad();
          re->grad[i] += (gu * b * b - gv * a * b) / m3;
        }
        if (im->requires_grad) {
          im->ensure_grad();
          im->grad[i] += (gv * a * a - gu * a * b) / m3;
        }
      }
    });
  }
  return {ure, uim};
}

TensorPtr phase_of(const CTensor& a) { return atan2_op(a.im, a.re); }

CTensor cmul_real(const CTensor& a, const TensorPtr& r) { return {mul(a.re, r), mul(a.im, r)}; }

CTensor cconv2d(const CTensor& x, const CTensor& w, const Conv2dSpec& spec) {
  TensorPtr none;
  return {sub(conv2d(x.re, w.re, none, spec), conv2d(x.im, w.im, none, spec)),
          add(conv2d(x.re, w.im, none, spec), conv2d(x.im, w.re, none, spec))};
}

CTensor cconv2d_transpose(const CTensor& x, const CTensor& w, const Conv2dSpec& spec) {
  TensorPtr none;
  return {sub(conv2d_transpose(x.re, w.re, none, spec), conv2d_transpose(x.im, w.im, none, spec)),
          add(conv2d_transpose(x.re, w.im, none, spec), conv2d_transpose(x.im, w.re, none, spec))};
}

Conv2dSpec same_pad(int kh, int kw, int dil_h, int dil_w) {
  Conv2dSpec s;
  s.dil_h = dil_h;
  s.dil_w = dil_w;
  int eh = (kh - 1) * dil_h, ew = (kw - 1) * dil_w;
  s.pad_h0 = eh / 2;
  s.pad_h1 = eh - s.pad_h0;
  s.pad_w0 = ew / 2;
  s.pad_w1 = ew - s.pad_w0;
  return s;
}

}  // namespace phasor::ops

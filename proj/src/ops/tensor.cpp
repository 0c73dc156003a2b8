// Copyright 2026 the phasor authors
// SPDX-License-Identifier: Apache-2.0

#include "phasor/tensor.hpp"

#include <sstream>

namespace phasor {

Shape::Shape(std::initializer_list<int64_t> dims) {
  if (dims.size() < 1 || dims.size() > 4)
    throw ShapeError("shape rank must be 1..4, got " + std::to_string(dims.size()));
  rank = static_cast<int>(dims.size());
  int i = 0;
  for (int64_t v : dims) {
    if (v < 0) throw ShapeError("negative dimension in shape");
    d[static_cast<size_t>(i++)] = v;
  }
  for (; i < 4; ++i) d[static_cast<size_t>(i)] = 1;
}

int64_t Shape::numel() const {
  int64_t n = 1;
  for (int i = 0; i < rank; ++i) n *= d[static_cast<size_t>(i)];
  return n;
}

bool Shape::operator==(const Shape& o) const {
  if (rank != o.rank) return false;
  for (int i = 0; i < rank; ++i)
    if (d[static_cast<size_t>(i)] != o.d[static_cast<size_t>(i)]) return false;
  return true;
}

std::array<int64_t, 4> Shape::strides() const {
  std::array<int64_t, 4> s{0, 0, 0, 0};
  int64_t acc = 1;
  for (int i = rank - 1; i >= 0; --i) {
    s[static_cast<size_t>(i)] = acc;
    acc *= d[static_cast<size_t>(i)];
  }
  return s;
}

std::string Shape::str() const {
  std::ostringstream os;
  os << '[';
  for (int i = 0; i < rank; ++i) {
    if (i) os << ',';
    os << d[static_cast<size_t>(i)];
  }
  os << ']';
  return os.str();
}

void Tensor::ensure_grad() {
  if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
}

void Tensor::zero_grad() {
  if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
}

TensorPtr zeros(const Shape& s) { return std::make_shared<Tensor>(s); }

TensorPtr full(const Shape& s, double v) { return std::make_shared<Tensor>(s, v); }

TensorPtr from_data(const Shape& s, std::vector<double> v) {
  if (static_cast<int64_t>(v.size()) != s.numel())
    throw ShapeError("from_data: " + std::to_string(v.size()) + " values for shape " + s.str());
  auto t = std::make_shared<Tensor>();
  t->shape = s;
  t->data = std::move(v);
  return t;
}

TensorPtr param(const Shape& s, double fill) {
  auto t = std::make_shared<Tensor>(s, fill);
  t->requires_grad = true;
  return t;
}

}  // namespace phasor

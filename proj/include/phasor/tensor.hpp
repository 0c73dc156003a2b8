// Copyright 2026 the phasor authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "phasor/common.hpp"

namespace phasor {

/// Dense row-major shape, rank 1..4. Scalars are shape {1}.
struct Shape {
  std::array<int64_t, 4> d{1, 1, 1, 1};
  int rank = 1;

  Shape() = default;
  Shape(std::initializer_list<int64_t> dims);

  int64_t numel() const;
  int64_t operator[](int i) const { return d[static_cast<size_t>(i)]; }
  int64_t& operator[](int i) { return d[static_cast<size_t>(i)]; }
  bool operator==(const Shape& o) const;
  bool operator!=(const Shape& o) const { return !(*this == o); }

  /// Row-major strides, in elements.
  std::array<int64_t, 4> strides() const;

  std::string str() const;  // "[2,3,4]"
};

/// Value plus optional gradient slot. Ops hand these around via shared_ptr;
/// the tape extends lifetimes by capturing the pointers in its closures.
struct Tensor {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until a backward pass touches it
  bool requires_grad = false;

  Tensor() = default;
  explicit Tensor(const Shape& s, double fill = 0.0)
      : shape(s), data(static_cast<size_t>(s.numel()), fill) {}

  int64_t numel() const { return shape.numel(); }

  /// Sizes grad to match data (zero-filled) if not present yet.
  void ensure_grad();
  void zero_grad();

  double& at(int64_t i) { return data[static_cast<size_t>(i)]; }
  double& at(int64_t i, int64_t j) { return data[static_cast<size_t>(i * shape.d[1] + j)]; }
  double& at(int64_t i, int64_t j, int64_t k) {
    return data[static_cast<size_t>((i * shape.d[1] + j) * shape.d[2] + k)];
  }
  double& at(int64_t i, int64_t j, int64_t k, int64_t l) {
    return data[static_cast<size_t>(((i * shape.d[1] + j) * shape.d[2] + k) * shape.d[3] + l)];
  }
  double cat(int64_t i) const { return data[static_cast<size_t>(i)]; }
  double cat(int64_t i, int64_t j) const { return data[static_cast<size_t>(i * shape.d[1] + j)]; }
  double cat(int64_t i, int64_t j, int64_t k) const {
    return data[static_cast<size_t>((i * shape.d[1] + j) * shape.d[2] + k)];
  }
  double cat(int64_t i, int64_t j, int64_t k, int64_t l) const {
    return data[static_cast<size_t>(((i * shape.d[1] + j) * shape.d[2] + k) * shape.d[3] + l)];
  }
};

using TensorPtr = std::shared_ptr<Tensor>;

/// Complex tensor as paired real planes. Gradients stay real on each plane;
/// no Wirtinger calculus anywhere.
struct CTensor {
  TensorPtr re, im;
};

TensorPtr zeros(const Shape& s);
TensorPtr full(const Shape& s, double v);
TensorPtr from_data(const Shape& s, std::vector<double> v);
TensorPtr param(const Shape& s, double fill = 0.0);  // requires_grad=true

}  // namespace phasor

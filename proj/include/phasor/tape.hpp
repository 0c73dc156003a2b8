// Copyright 2026 the phasor authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <vector>

#include "phasor/tensor.hpp"

namespace phasor {

/// Reverse-mode tape. Ops that see an active tape and a grad-requiring input
/// push one closure each; backward() replays them newest-first. Closures
/// accumulate with += so shared nodes collect every contribution before their
/// producer runs.
class Tape {
 public:
  void push(std::function<void()> fn) { entries_.push_back(std::move(fn)); }

  /// Seeds d(loss)=1 and runs the recorded closures in reverse. The loss must
  /// be scalar. One backward per tape; record a fresh graph for another pass.
  void backward(const TensorPtr& loss);

  size_t size() const { return entries_.size(); }

  static Tape* current();

 private:
  friend class TapeScope;
  std::vector<std::function<void()>> entries_;
};

/// RAII installer: ops record onto the innermost live scope's tape. Without
/// any scope they run eagerly and temporaries free as their handles drop.
class TapeScope {
 public:
  TapeScope();
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

  Tape& tape() { return tape_; }

 private:
  Tape tape_;
  Tape* prev_;
};

}  // namespace phasor

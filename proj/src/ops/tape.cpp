// Copyright 2026 the phasor authors
// SPDX-License-Identifier: Apache-2.0

#include "phasor/tape.hpp"

namespace phasor {

namespace {
thread_local Tape* g_current = nullptr;
}

Tape* Tape::current() { return g_current; }

void Tape::backward(const TensorPtr& loss) {
  if (!loss) throw ValueError("backward: null loss");
  if (loss->numel() != 1)
    throw ShapeError("backward needs a scalar loss, got " + loss->shape.str());
  loss->ensure_grad();
  loss->grad[0] = 1.0;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) (*it)();
  entries_.clear();
}

TapeScope::TapeScope() : prev_(g_current) { g_current = &tape_; }

TapeScope::~TapeScope() { g_current = prev_; }

}  // namespace phasor

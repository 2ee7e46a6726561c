// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <vector>

#include "choreo/tensor/tensor.hpp"

namespace choreo {
inline namespace CHOREO_REAL_NS {
namespace detail {

using BackwardFn = std::function<void(Node&)>;

/// Wraps a freshly computed value as a graph node. History is recorded only
/// when grad mode is on and some input requires grad.
Tensor make_op(const char* op, Shape shape, std::vector<Real> data,
               std::vector<Tensor> inputs, BackwardFn backward);

inline bool wants_grad(const Node& self, std::size_t input) {
  return self.inputs[input]->requires_grad;
}

}  // namespace detail
}  // namespace CHOREO_REAL_NS
}  // namespace choreo

// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <vector>

#include "choreo/tensor/tensor.hpp"

namespace choreo {
inline namespace CHOREO_REAL_NS {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

using ScalarClosure = std::function<Tensor(const std::vector<Tensor>&)>;

/// Compares reverse-mode gradients of a scalar closure with central
/// differences, element by element. Differences are accumulated in double.
///
/// relative error = |analytic - numeric| / max(|analytic|, |numeric|, floor)
///
/// A closure whose result carries no history has an analytic gradient of
/// exactly zero.
GradCheckResult grad_check(const ScalarClosure& fn, std::vector<Tensor> inputs, double h = 1e-3,
                           double floor = 1e-3);

}  // namespace CHOREO_REAL_NS
}  // namespace choreo

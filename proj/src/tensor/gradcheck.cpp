// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#include "choreo/tensor/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace choreo {
inline namespace CHOREO_REAL_NS {

namespace {

double eval(const ScalarClosure& fn, const std::vector<Tensor>& inputs) {
  NoGradGuard guard;
  Tensor out = fn(inputs);
  double acc = 0.0;
  for (Real v : out.data()) acc += static_cast<double>(v);
  return acc;
}

}  // namespace

GradCheckResult grad_check(const ScalarClosure& fn, std::vector<Tensor> inputs, double h,
                           double floor) {
  for (auto& t : inputs) {
    t.zero_grad();
    t.set_requires_grad(true);
  }
  {
    Tensor out = fn(inputs);
    if (out.numel() != 1) throw ShapeError("grad_check closure must return a scalar");
    if (out.requires_grad()) out.backward();
  }

  GradCheckResult result;
  for (std::size_t ti = 0; ti < inputs.size(); ++ti) {
    Tensor& t = inputs[ti];
    const std::vector<Real> analytic(t.grad().begin(), t.grad().end());
    auto values = t.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const Real saved = values[i];
      values[i] = static_cast<Real>(saved + h);
      const double plus = eval(fn, inputs);
      values[i] = static_cast<Real>(saved - h);
      const double minus = eval(fn, inputs);
      values[i] = saved;
      const double numeric = (plus - minus) / (2.0 * h);
      const double a = analytic.empty() ? 0.0 : static_cast<double>(analytic[i]);
      const double denom = std::max({std::abs(a), std::abs(numeric), floor});
      const double err = std::abs(a - numeric) / denom;
      if (err > result.max_relative_error || (ti == 0 && i == 0)) {
        result.max_relative_error = std::max(result.max_relative_error, err);
        result.worst_input = ti;
        result.worst_index = i;
        result.analytic = a;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace CHOREO_REAL_NS
}  // namespace choreo

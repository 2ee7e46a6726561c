// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>

#include "choreo/kernels/kernels.hpp"

namespace choreo::kernels {

// One AdamW lane; SIMD variants replicate exactly this operation order.
inline void adamw_lane(float& p, float g, float& m, float& v, const AdamWStep& s) {
  m = s.beta1 * m + s.one_minus_beta1 * g;
  v = s.beta2 * v + s.one_minus_beta2 * (g * g);
  const float m_hat = m / s.bias_correction1;
  const float v_hat = v / s.bias_correction2;
  const float update = m_hat / (std::sqrt(v_hat) + s.eps) + s.weight_decay * p;
  p = p - s.lr * update;
}

}  // namespace choreo::kernels

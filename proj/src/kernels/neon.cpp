// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

// AArch64 variant. Separate vmulq/vaddq, no fused multiply-add.

#include "choreo/kernels/kernels.hpp"

#if defined(__aarch64__) && defined(__ARM_NEON)

#include <arm_neon.h>

#include "kernels_internal.hpp"

namespace choreo::kernels {
namespace {

void gemm_acc(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t a_row,
              std::size_t a_col, const float* b, float* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const float* ai = a + i * a_row;
    float* ci = c + i * n;
    std::size_t j = 0;
    for (; j + 8 <= n; j += 8) {
      float32x4_t acc0 = vld1q_f32(ci + j);
      float32x4_t acc1 = vld1q_f32(ci + j + 4);
      for (std::size_t p = 0; p < k; ++p) {
        const float32x4_t av = vdupq_n_f32(ai[p * a_col]);
        acc0 = vaddq_f32(acc0, vmulq_f32(av, vld1q_f32(b + p * n + j)));
        acc1 = vaddq_f32(acc1, vmulq_f32(av, vld1q_f32(b + p * n + j + 4)));
      }
      vst1q_f32(ci + j, acc0);
      vst1q_f32(ci + j + 4, acc1);
    }
    for (; j < n; ++j) {
      float s = ci[j];
      for (std::size_t p = 0; p < k; ++p) s = s + ai[p * a_col] * b[p * n + j];
      ci[j] = s;
    }
  }
}

void add(std::size_t n, const float* x, const float* y, float* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) vst1q_f32(out + i, vaddq_f32(vld1q_f32(x + i), vld1q_f32(y + i)));
  for (; i < n; ++i) out[i] = x[i] + y[i];
}

void mul(std::size_t n, const float* x, const float* y, float* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) vst1q_f32(out + i, vmulq_f32(vld1q_f32(x + i), vld1q_f32(y + i)));
  for (; i < n; ++i) out[i] = x[i] * y[i];
}

void axpy(std::size_t n, float alpha, const float* x, float* y) {
  const float32x4_t av = vdupq_n_f32(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    vst1q_f32(y + i, vaddq_f32(vld1q_f32(y + i), vmulq_f32(av, vld1q_f32(x + i))));
  }
  for (; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void adamw(std::size_t n, float* param, const float* grad, float* m, float* v,
           const AdamWStep& s) {
  for (std::size_t i = 0; i < n; ++i) adamw_lane(param[i], grad[i], m[i], v[i], s);
}

}  // namespace

const KernelTable* neon_table() {
  static const KernelTable table{Isa::kNeon, "neon", gemm_acc, add, mul, axpy, adamw};
  return &table;
}

}  // namespace choreo::kernels

#else

namespace choreo::kernels {
const KernelTable* neon_table() { return nullptr; }
}  // namespace choreo::kernels

#endif

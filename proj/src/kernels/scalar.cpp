// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "choreo/kernels/kernels.hpp"
#include "kernels_internal.hpp"

namespace choreo::kernels {
namespace {

void gemm_acc(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t a_row,
              std::size_t a_col, const float* b, float* c) {
  for (std::size_t i = 0; i < m; ++i) {
    float* c_row = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const float av = a[i * a_row + p * a_col];
      const float* b_row = b + p * n;
      for (std::size_t j = 0; j < n; ++j) {
        c_row[j] = c_row[j] + av * b_row[j];
      }
    }
  }
}

void add(std::size_t n, const float* x, const float* y, float* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + y[i];
}

void mul(std::size_t n, const float* x, const float* y, float* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * y[i];
}

void axpy(std::size_t n, float alpha, const float* x, float* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void adamw(std::size_t n, float* param, const float* grad, float* m, float* v,
           const AdamWStep& s) {
  for (std::size_t i = 0; i < n; ++i) {
    adamw_lane(param[i], grad[i], m[i], v[i], s);
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{Isa::kScalar, "scalar", gemm_acc, add, mul, axpy, adamw};
  return table;
}

}  // namespace choreo::kernels

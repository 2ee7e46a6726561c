// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace choreo::kernels {

enum class Isa { kScalar, kAvx2, kNeon };

/// Hyperparameters of one AdamW update, with the derived constants
/// precomputed so every variant evaluates the same float expression.
struct AdamWStep {
  float lr = 1e-3F;
  float beta1 = 0.9F;
  float beta2 = 0.999F;
  float one_minus_beta1 = 0.1F;
  float one_minus_beta2 = 0.001F;
  float bias_correction1 = 1.0F;  // 1 - beta1^t
  float bias_correction2 = 1.0F;  // 1 - beta2^t
  float eps = 1e-8F;
  float weight_decay = 0.0F;
};

/// Inner-loop kernels shared by the tensor engine.
///
/// Every variant performs the same per-element sequence of IEEE operations
/// as the scalar reference (separate multiply and add, reductions along k in
/// increasing order), so results are bit-identical across variants. SIMD
/// lanes only ever run across independent output elements.
struct KernelTable {
  Isa isa;
  const char* name;

  /// C[m x n] += A[m x k] * B[k x n]. A is addressed as a[i*a_row + p*a_col]
  /// so a transposed operand needs no copy; B and C are dense row-major.
  void (*gemm_acc)(std::size_t m, std::size_t n, std::size_t k, const float* a,
                   std::size_t a_row, std::size_t a_col, const float* b, float* c);

  void (*add)(std::size_t n, const float* x, const float* y, float* out);
  void (*mul)(std::size_t n, const float* x, const float* y, float* out);
  /// y += alpha * x
  void (*axpy)(std::size_t n, float alpha, const float* x, float* y);
  void (*adamw)(std::size_t n, float* param, const float* grad, float* m, float* v,
                const AdamWStep& step);
};

const KernelTable& scalar_table();
/// nullptr when the variant was not compiled in or the CPU lacks it.
const KernelTable* avx2_table();
const KernelTable* neon_table();

/// All variants usable on this machine, scalar first.
std::vector<const KernelTable*> available_tables();

/// Best available variant, chosen once. CHOREO_KERNELS=scalar|avx2|neon
/// forces a specific one (falls back to scalar if unavailable).
const KernelTable& active();

std::string_view isa_name(Isa isa);

}  // namespace choreo::kernels

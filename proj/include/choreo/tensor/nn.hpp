// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "choreo/io/checkpoint.hpp"
#include "choreo/tensor/ops.hpp"
#include "choreo/util/rng.hpp"

namespace choreo {
inline namespace CHOREO_REAL_NS {

struct NamedParam {
  std::string name;
  Tensor tensor;
};

/// Ordered parameter registry; names become checkpoint keys.
class ParamList {
 public:
  void add(std::string name, Tensor t);
  void append(const ParamList& other);

  const std::vector<NamedParam>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  std::size_t element_count() const;

  void set_trainable(bool trainable);
  void zero_grad();
  /// Hash of all parameter values in registration order.
  std::uint64_t hash() const;
  /// True when every parameter's gradient is absent or exactly zero.
  bool grads_all_zero() const;

  void store(Checkpoint& ck) const;
  /// Copies values from `ck`; every name must exist with an identical shape.
  void load(const Checkpoint& ck);

 private:
  std::vector<NamedParam> items_;
};

Tensor init_uniform(Shape shape, Real bound, Rng& rng);
Tensor init_normal(Shape shape, Real stddev, Rng& rng);

class Linear {
 public:
  Linear() = default;
  Linear(std::size_t in, std::size_t out, Rng& rng, bool with_bias = true);

  /// x [..., in] -> [..., out]
  Tensor operator()(const Tensor& x) const;
  void collect(const std::string& prefix, ParamList& out) const;

  Tensor weight;  // [in, out]
  Tensor bias;    // [out] or undefined
};

class LayerNorm {
 public:
  LayerNorm() = default;
  explicit LayerNorm(std::size_t dim);

  Tensor operator()(const Tensor& x) const;
  void collect(const std::string& prefix, ParamList& out) const;

  Tensor gain;
  Tensor bias;
};

class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(std::size_t in, std::size_t out, Conv1dSpec spec, Rng& rng);

  Tensor operator()(const Tensor& x) const;
  void collect(const std::string& prefix, ParamList& out) const;

  Conv1dSpec spec;
  Tensor weight;  // [K*in, out]
  Tensor bias;
};

class ConvTranspose1d {
 public:
  ConvTranspose1d() = default;
  ConvTranspose1d(std::size_t in, std::size_t out, Conv1dSpec spec, Rng& rng);

  Tensor operator()(const Tensor& x) const;
  void collect(const std::string& prefix, ParamList& out) const;

  Conv1dSpec spec;
  Tensor weight;  // [in, K*out]
  Tensor bias;
};

struct AdamWConfig {
  float lr = 2e-4F;
  float beta1 = 0.9F;
  float beta2 = 0.99F;
  float eps = 1e-8F;
  float weight_decay = 0.0F;
  float clip_norm = 0.0F;  // 0 disables global-norm clipping
};

class AdamW {
 public:
  AdamW(ParamList params, AdamWConfig config);

  /// Applies one update to every parameter holding a gradient, then clears
  /// gradients. Returns the pre-clip global gradient norm.
  double step();
  void set_lr(float lr) { config_.lr = lr; }
  const AdamWConfig& config() const { return config_; }
  std::uint64_t steps() const { return t_; }

 private:
  ParamList params_;
  AdamWConfig config_;
  std::vector<std::vector<Real>> m_;
  std::vector<std::vector<Real>> v_;
  std::uint64_t t_ = 0;
};

}  // namespace CHOREO_REAL_NS
}  // namespace choreo

// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#include "choreo/tensor/nn.hpp"

#include <cmath>
#include <stdexcept>

#include "real_kernels.hpp"

namespace choreo {
inline namespace CHOREO_REAL_NS {

void ParamList::add(std::string name, Tensor t) {
  if (!t.defined()) return;
  items_.push_back({std::move(name), std::move(t)});
}

void ParamList::append(const ParamList& other) {
  for (const auto& p : other.items_) items_.push_back(p);
}

std::size_t ParamList::element_count() const {
  std::size_t n = 0;
  for (const auto& p : items_) n += p.tensor.numel();
  return n;
}

void ParamList::set_trainable(bool trainable) {
  for (auto& p : items_) p.tensor.set_requires_grad(trainable);
}

void ParamList::zero_grad() {
  for (auto& p : items_) p.tensor.zero_grad();
}

std::uint64_t ParamList::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& p : items_) {
    h = fnv1a(p.name.data(), p.name.size(), h);
    const auto d = p.tensor.data();
    h = fnv1a(d.data(), d.size_bytes(), h);
  }
  return h;
}

bool ParamList::grads_all_zero() const {
  for (const auto& p : items_) {
    for (Real g : p.tensor.grad()) {
      if (g != Real{0}) return false;
    }
  }
  return true;
}

void ParamList::store(Checkpoint& ck) const {
  for (const auto& p : items_) {
    StoredTensor st;
    st.shape = p.tensor.shape();
    st.values = p.tensor.to_floats();
    ck.tensors[p.name] = std::move(st);
  }
}

void ParamList::load(const Checkpoint& ck) {
  for (auto& p : items_) {
    const StoredTensor& st = ck.get(p.name);
    if (st.shape != p.tensor.shape()) {
      throw CheckpointError("tensor '" + p.name + "' has shape " + shape_str(st.shape) +
                            " in checkpoint, model expects " + shape_str(p.tensor.shape()));
    }
    auto dst = p.tensor.mutable_data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<Real>(st.values[i]);
  }
}

Tensor init_uniform(Shape shape, Real bound, Rng& rng) {
  std::vector<Real> v(shape_numel(shape));
  for (auto& x : v) x = static_cast<Real>(rng.uniform(-bound, bound));
  return Tensor::from_data(std::move(shape), std::move(v), true);
}

Tensor init_normal(Shape shape, Real stddev, Rng& rng) {
  std::vector<Real> v(shape_numel(shape));
  for (auto& x : v) x = static_cast<Real>(rng.normal() * stddev);
  return Tensor::from_data(std::move(shape), std::move(v), true);
}

namespace {
Real fan_in_bound(std::size_t fan_in) { return Real(1) / std::sqrt(static_cast<Real>(fan_in)); }
}  // namespace

Linear::Linear(std::size_t in, std::size_t out, Rng& rng, bool with_bias) {
  weight = init_uniform({in, out}, fan_in_bound(in), rng);
  if (with_bias) bias = Tensor::zeros({out}, true);
}

Tensor Linear::operator()(const Tensor& x) const {
  Tensor y = matmul(x, weight);
  return bias.defined() ? add(y, bias) : y;
}

void Linear::collect(const std::string& prefix, ParamList& out) const {
  out.add(prefix + ".weight", weight);
  out.add(prefix + ".bias", bias);
}

LayerNorm::LayerNorm(std::size_t dim)
    : gain(Tensor::full({dim}, Real(1), true)), bias(Tensor::zeros({dim}, true)) {}

Tensor LayerNorm::operator()(const Tensor& x) const { return layer_norm(x, gain, bias); }

void LayerNorm::collect(const std::string& prefix, ParamList& out) const {
  out.add(prefix + ".gain", gain);
  out.add(prefix + ".bias", bias);
}

Conv1d::Conv1d(std::size_t in, std::size_t out, Conv1dSpec s, Rng& rng) : spec(s) {
  weight = init_uniform({s.kernel * in, out}, fan_in_bound(s.kernel * in), rng);
  bias = Tensor::zeros({out}, true);
}

Tensor Conv1d::operator()(const Tensor& x) const { return conv1d(x, weight, bias, spec); }

void Conv1d::collect(const std::string& prefix, ParamList& out) const {
  out.add(prefix + ".weight", weight);
  out.add(prefix + ".bias", bias);
}

ConvTranspose1d::ConvTranspose1d(std::size_t in, std::size_t out, Conv1dSpec s, Rng& rng)
    : spec(s) {
  const std::size_t taps_per_output = (s.kernel + s.stride - 1) / s.stride;
  weight = init_uniform({in, s.kernel * out}, fan_in_bound(taps_per_output * in), rng);
  bias = Tensor::zeros({out}, true);
}

Tensor ConvTranspose1d::operator()(const Tensor& x) const {
  return conv_transpose1d(x, weight, bias, spec);
}

void ConvTranspose1d::collect(const std::string& prefix, ParamList& out) const {
  out.add(prefix + ".weight", weight);
  out.add(prefix + ".bias", bias);
}

AdamW::AdamW(ParamList params, AdamWConfig config) : params_(std::move(params)), config_(config) {
  for (const auto& p : params_.items()) {
    m_.emplace_back(p.tensor.numel(), Real{0});
    v_.emplace_back(p.tensor.numel(), Real{0});
  }
}

double AdamW::step() {
  double sq = 0.0;
  for (const auto& p : params_.items()) {
    for (Real g : p.tensor.grad()) sq += static_cast<double>(g) * static_cast<double>(g);
  }
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) {
    params_.zero_grad();
    return norm;
  }
  Real clip = Real(1);
  if (config_.clip_norm > 0.0F && norm > config_.clip_norm) {
    clip = static_cast<Real>(config_.clip_norm / (norm + 1e-6));
  }

  ++t_;
  kernels::AdamWStep s{};
  s.lr = config_.lr;
  s.beta1 = config_.beta1;
  s.beta2 = config_.beta2;
  s.one_minus_beta1 = 1.0F - config_.beta1;
  s.one_minus_beta2 = 1.0F - config_.beta2;
  s.bias_correction1 = static_cast<float>(1.0 - std::pow(double(config_.beta1), double(t_)));
  s.bias_correction2 = static_cast<float>(1.0 - std::pow(double(config_.beta2), double(t_)));
  s.eps = config_.eps;
  s.weight_decay = config_.weight_decay;

  const auto& items = params_.items();
  std::vector<Real> scaled;
  for (std::size_t i = 0; i < items.size(); ++i) {
    Tensor t = items[i].tensor;
    if (!t.has_grad()) continue;
    auto g = t.grad();
    const Real* gp = g.data();
    if (clip != Real(1)) {
      scaled.assign(g.begin(), g.end());
      for (auto& x : scaled) x *= clip;
      gp = scaled.data();
    }
    auto p = t.mutable_data();
#if !defined(CHOREO_REAL_DOUBLE)
    kernels::active().adamw(p.size(), p.data(), gp, m_[i].data(), v_[i].data(), s);
#else
    {
      for (std::size_t j = 0; j < p.size(); ++j) {
        Real& m = m_[i][j];
        Real& v = v_[i][j];
        const Real gj = gp[j];
        m = Real(s.beta1) * m + Real(s.one_minus_beta1) * gj;
        v = Real(s.beta2) * v + Real(s.one_minus_beta2) * (gj * gj);
        const Real mhat = m / Real(s.bias_correction1);
        const Real vhat = v / Real(s.bias_correction2);
        const Real update = mhat / (std::sqrt(vhat) + Real(s.eps)) + Real(s.weight_decay) * p[j];
        p[j] = p[j] - Real(s.lr) * update;
      }
    }
#endif
  }
  params_.zero_grad();
  return norm;
}

}  // namespace CHOREO_REAL_NS
}  // namespace choreo

// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>

#include "choreo/gpt/gpt.hpp"

namespace choreo {
inline namespace CHOREO_REAL_NS {

namespace {

constexpr Real kNegInf = -std::numeric_limits<Real>::infinity();

// Additive score mask [1 or B, 1, T, T].
Tensor score_mask(std::size_t batch, std::size_t t, const AttentionOptions& opt) {
  if (opt.mode == AttentionMode::kCausal) {
    std::vector<Real> m(t * t, Real(0));
    for (std::size_t i = 0; i < t; ++i)
      for (std::size_t j = i + 1; j < t; ++j) m[i * t + j] = kNegInf;
    return Tensor::from_data({1, 1, t, t}, std::move(m));
  }
  const KeyMask& keys = *opt.keys;
  std::vector<Real> m(batch * t * t, Real(0));
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t j = 0; j < t; ++j) {
      if (j == 0 || keys[b][j]) continue;
      for (std::size_t i = 0; i < t; ++i) m[(b * t + i) * t + j] = kNegInf;
    }
  }
  return Tensor::from_data({batch, 1, t, t}, std::move(m));
}

Tensor keep_mask(std::size_t batch, std::size_t t, const KeyMask& keys) {
  std::vector<Real> m(batch * t * t, Real(0));
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t i = 0; i < t; ++i)
      for (std::size_t j = 0; j < t; ++j) m[(b * t + i) * t + j] = (j == 0 || keys[b][j]) ? 1 : 0;
  return Tensor::from_data({batch, 1, t, t}, std::move(m));
}

}  // namespace

SelfAttention::SelfAttention(std::size_t dim, std::size_t heads, Rng& rng)
    : dim_(dim), heads_(heads), q_(dim, dim, rng), k_(dim, dim, rng), v_(dim, dim, rng),
      o_(dim, dim, rng), bias_(Tensor::zeros({heads, 1, 1}, true)) {}

Tensor SelfAttention::operator()(const Tensor& x, const AttentionOptions& opt) const {
  const std::size_t b = x.dim(0), t = x.dim(1), dh = dim_ / heads_;
  if (opt.mode == AttentionMode::kMasked) {
    if (opt.keys == nullptr) throw std::invalid_argument("masked attention requires a key mask");
    if (opt.keys->size() != b) throw ShapeError("key mask batch does not match input");
    for (const auto& row : *opt.keys) {
      if (row.size() != t) throw ShapeError("key mask length does not match sequence");
    }
  }
  auto split = [&](const Tensor& y) { return transpose(reshape(y, {b, t, heads_, dh}), 1, 2); };
  Tensor q = split(q_(x));
  Tensor k = split(k_(x));
  Tensor v = split(v_(x));
  Tensor scores = scale(matmul(q, transpose(k, 2, 3)), Real(1) / std::sqrt(static_cast<Real>(dh)));
  scores = add(scores, bias_);
  Tensor probs;
  if (opt.mode == AttentionMode::kMasked && opt.post_softmax) {
    probs = mul(softmax_lastdim(scores), keep_mask(b, t, *opt.keys));
  } else {
    probs = softmax_lastdim(add(scores, score_mask(b, t, opt)));
  }
  Tensor ctx = reshape(transpose(matmul(probs, v), 1, 2), {b, t, dim_});
  return o_(ctx);
}

void SelfAttention::collect(const std::string& prefix, ParamList& out) const {
  q_.collect(prefix + ".q", out);
  k_.collect(prefix + ".k", out);
  v_.collect(prefix + ".v", out);
  o_.collect(prefix + ".o", out);
  out.add(prefix + ".score_bias", bias_);
}

Block::Block(std::size_t dim, std::size_t heads, Rng& rng)
    : ln1_(dim), ln2_(dim), attn_(dim, heads, rng), fc1_(dim, 4 * dim, rng), fc2_(4 * dim, dim, rng) {}

Tensor Block::operator()(const Tensor& x, const AttentionOptions& opt) const {
  Tensor h = add(x, attn_(ln1_(x), opt));
  return add(h, fc2_(gelu(fc1_(ln2_(h)))));
}

void Block::collect(const std::string& prefix, ParamList& out) const {
  ln1_.collect(prefix + ".ln1", out);
  attn_.collect(prefix + ".attn", out);
  ln2_.collect(prefix + ".ln2", out);
  fc1_.collect(prefix + ".fc1", out);
  fc2_.collect(prefix + ".fc2", out);
}

BaseStack::BaseStack(const GptConfig& c, Rng& rng) {
  const auto d = static_cast<std::size_t>(c.dim);
  tok_emb = init_normal({static_cast<std::size_t>(c.vocab()), d}, Real(0.02), rng);
  pos_emb = init_normal({static_cast<std::size_t>(c.max_rows()), d}, Real(0.02), rng);
  for (int i = 0; i < c.base_layers; ++i) {
    blocks_.emplace_back(d, static_cast<std::size_t>(c.heads), rng);
  }
}

Tensor BaseStack::token_rows(const std::vector<TokenSequence>& prefixes, const Tensor& mask_emb,
                             const std::vector<std::vector<bool>>* masked) const {
  const std::size_t b = prefixes.size(), n = prefixes.front().size();
  const std::size_t d = tok_emb.dim(1);
  std::vector<int> flat;
  for (const auto& p : prefixes) {
    if (p.size() != n) throw ShapeError("token_rows: ragged prefixes");
    flat.insert(flat.end(), p.begin(), p.end());
  }
  Tensor rows = reshape(embedding(tok_emb, flat), {b, n, d});
  if (masked == nullptr) return rows;
  // rows * keep + mask_emb * (1 - keep)
  std::vector<Real> keep(b * n, Real(1));
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if ((*masked)[i][j]) keep[i * n + j] = Real(0);
  std::vector<Real> drop(keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) drop[i] = Real(1) - keep[i];
  Tensor keep_t = Tensor::from_data({b, n, 1}, std::move(keep));
  Tensor drop_t = Tensor::from_data({b, n, 1}, std::move(drop));
  return add(mul(rows, keep_t), mul(reshape(mask_emb, {1, 1, d}), drop_t));
}

Tensor BaseStack::run(const Tensor& rows) const {
  const std::size_t t = rows.dim(1);
  if (t > pos_emb.dim(0)) {
    throw ShapeError("sequence of " + std::to_string(t) + " rows exceeds the position table (" +
                     std::to_string(pos_emb.dim(0)) + ")");
  }
  Tensor h = add(rows, narrow(pos_emb, 0, 0, t));
  for (const auto& blk : blocks_) h = blk(h, {});
  return h;
}

void BaseStack::collect(const std::string& prefix, ParamList& out) const {
  out.add(prefix + ".tok_emb", tok_emb);
  out.add(prefix + ".pos_emb", pos_emb);
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    blocks_[i].collect(prefix + ".block" + std::to_string(i), out);
  }
}

Head::Head(const GptConfig& c, Rng& rng)
    : ln_f_(static_cast<std::size_t>(c.dim)),
      out_(static_cast<std::size_t>(c.dim), static_cast<std::size_t>(c.vocab()), rng) {
  for (int i = c.base_layers; i < c.layers; ++i) {
    blocks_.emplace_back(static_cast<std::size_t>(c.dim), static_cast<std::size_t>(c.heads), rng);
  }
}

Tensor Head::operator()(const Tensor& features, const AttentionOptions& opt) const {
  Tensor h = features;
  for (const auto& blk : blocks_) h = blk(h, opt);
  return out_(ln_f_(h));
}

void Head::collect(const std::string& prefix, ParamList& out) const {
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    blocks_[i].collect(prefix + ".block" + std::to_string(i), out);
  }
  ln_f_.collect(prefix + ".ln_f", out);
  out_.collect(prefix + ".out", out);
}

MusicEncoder::MusicEncoder(const GptConfig& c, Rng& rng)
    : down_(static_cast<std::size_t>(c.down)),
      fc1_(static_cast<std::size_t>(c.music_channels), static_cast<std::size_t>(c.dim), rng),
      fc2_(static_cast<std::size_t>(c.dim), static_cast<std::size_t>(c.dim), rng) {}

Tensor MusicEncoder::operator()(const Tensor& music) const {
  const std::size_t b = music.dim(0), f = music.dim(1), c = music.dim(2);
  if (f % down_ != 0) throw ShapeError("music frames must be a multiple of the token rate");
  Tensor pooled = mean_dim(reshape(music, {b, f / down_, down_, c}), 2);
  return fc2_(gelu(fc1_(pooled)));
}

void MusicEncoder::collect(const std::string& prefix, ParamList& out) const {
  fc1_.collect(prefix + ".fc1", out);
  fc2_.collect(prefix + ".fc2", out);
}

Tensor stack_music(const std::vector<const MusicFeatures*>& music) {
  if (music.empty()) throw ShapeError("stack_music needs at least one sequence");
  const std::size_t f = music.front()->frames, c = music.front()->channels;
  std::vector<Real> data;
  data.reserve(music.size() * f * c);
  for (const auto* m : music) {
    if (m->frames != f || m->channels != c) throw ShapeError("stack_music: ragged batch");
    for (float v : m->values) data.push_back(static_cast<Real>(v));
  }
  return Tensor::from_data({music.size(), f, c}, std::move(data));
}

}  // namespace CHOREO_REAL_NS
}  // namespace choreo

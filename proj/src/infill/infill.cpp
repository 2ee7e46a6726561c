// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#include "choreo/infill/infill.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "choreo/util/errors.hpp"

namespace choreo {
inline namespace CHOREO_REAL_NS {

std::size_t InfillMask::predict_count() const {
  return static_cast<std::size_t>(std::count(predict.begin(), predict.end(), true));
}

InfillMask build_infill_mask(const std::vector<std::size_t>& positions, std::size_t k,
                             std::size_t length) {
  InfillMask m;
  m.predict.assign(length, false);
  for (std::size_t p : positions) {
    if (p >= length) {
      throw IndexError("keyframe position " + std::to_string(p) + " outside a " +
                       std::to_string(length) + "-token sequence");
    }
    const std::size_t lo = p >= k ? p - k : 0;
    const std::size_t hi = std::min(length - 1, p + k);
    for (std::size_t i = lo; i <= hi; ++i) m.predict[i] = true;
  }
  for (std::size_t p : positions) m.predict[p] = false;
  return m;
}

InfillModel::InfillModel(const CrossModalGpt& gpt, std::uint64_t seed) {
  Rng rng(seed);
  head_ = Head(gpt.config(), rng);
  mask_emb_ = init_normal({1, static_cast<std::size_t>(gpt.config().dim)}, Real(0.02), rng);
  ParamList src, dst;
  gpt.shared_head().collect("h", src);
  head_.collect("h", dst);
  for (std::size_t i = 0; i < src.size(); ++i) {
    const auto from = src.items()[i].tensor.data();
    Tensor to = dst.items()[i].tensor;
    std::copy(from.begin(), from.end(), to.mutable_data().begin());
  }
}

Tensor InfillModel::logits(const CrossModalGpt& gpt, const std::vector<TokenSequence>& tokens,
                           const std::vector<std::vector<bool>>& masked) const {
  if (tokens.size() != masked.size()) throw ShapeError("infill: one mask per sequence required");
  KeyMask keys;
  for (const auto& m : masked) {
    std::vector<bool> row(m.size() + 1, true);
    for (std::size_t i = 0; i < m.size(); ++i) row[i + 1] = !m[i];
    keys.push_back(std::move(row));
  }
  AttentionOptions opt;
  opt.mode = AttentionMode::kMasked;
  opt.keys = &keys;
  opt.post_softmax = post_softmax;
  return head_(gpt.m_base(Tensor(), tokens, mask_emb_, &masked), opt);
}

ParamList InfillModel::params() const {
  ParamList out;
  head_.collect("infill.head", out);
  out.add("infill.mask", mask_emb_);
  return out;
}

Tensor infill_loss(const CrossModalGpt& gpt, const InfillModel& model,
                   const std::vector<TokenSequence>& tokens,
                   const std::vector<std::vector<bool>>& masked) {
  const int pad = gpt.config().pad_token();
  std::vector<int> targets;
  bool any = false;
  for (std::size_t b = 0; b < tokens.size(); ++b) {
    targets.push_back(pad);  // row 0
    for (std::size_t i = 0; i < tokens[b].size(); ++i) {
      targets.push_back(masked[b][i] ? tokens[b][i] : pad);
      any = any || masked[b][i];
    }
  }
  if (!any) return {};
  return cross_entropy(model.logits(gpt, tokens, masked), targets, pad);
}

namespace {

std::vector<bool> random_mask(std::size_t n, double rate, Rng& rng) {
  std::vector<bool> m(n);
  for (std::size_t i = 0; i < n; ++i) m[i] = rng.bernoulli(rate);
  return m;
}

}  // namespace

InfillTrainReport train_infill(const CrossModalGpt& gpt, InfillModel& model,
                               const std::vector<TokenSequence>& data,
                               const InfillTrainConfig& config, const LogFn& log) {
  if (data.empty()) throw DataError("train_infill: empty token corpus");
  std::map<std::size_t, std::vector<const TokenSequence*>> by_length;
  for (const auto& t : data) {
    if (t.empty()) throw DataError("train_infill: empty token sequence");
    by_length[t.size()].push_back(&t);
  }
  gpt.all_params().set_trainable(false);
  ParamList params = model.params();
  params.set_trainable(true);
  AdamWConfig oc;
  oc.lr = static_cast<float>(config.lr);
  oc.beta1 = 0.5F;
  oc.beta2 = 0.99F;
  oc.clip_norm = 1.0F;
  AdamW opt(params, oc);
  Rng rng(config.seed);
  InfillTrainReport report;
  double avg = -1.0;
  for (int step = 0; step < config.steps; ++step) {
    const double progress = static_cast<double>(step) / config.steps;
    opt.set_lr(static_cast<float>(config.lr * (0.1 + 0.45 * (1.0 + std::cos(std::numbers::pi * progress)))));
    const auto& pool = by_length[data[rng.below(data.size())].size()];
    std::vector<TokenSequence> batch;
    std::vector<std::vector<bool>> masked;
    for (int i = 0; i < config.batch; ++i) {
      batch.push_back(*pool[rng.below(pool.size())]);
      masked.push_back(random_mask(batch.back().size(), config.mask_rate, rng));
    }
    Tensor loss = infill_loss(gpt, model, batch, masked);
    if (!loss.defined()) {
      ++report.skipped;
      emit(log, "warning: infill step " + std::to_string(step) + " has no masked position; skipped");
      continue;
    }
    const double value = loss.item();
    if (!std::isfinite(value)) {
      throw DivergenceError("infill loss is not finite at step " + std::to_string(step));
    }
    loss.backward();
    opt.step();
    avg = avg < 0 ? value : 0.9 * avg + 0.1 * value;
    report.final_nll = avg;
    if (step % 100 == 0 || step + 1 == config.steps) {
      emit(log, "infill step " + std::to_string(step) + " masked nll " + std::to_string(avg));
    }
  }
  params.set_trainable(false);
  return report;
}

double masked_recovery(const CrossModalGpt& gpt, const InfillModel& model,
                       const std::vector<TokenSequence>& data, double mask_rate, std::uint64_t seed) {
  NoGradGuard guard;
  Rng rng(seed);
  const auto v = static_cast<std::size_t>(gpt.config().vocab());
  const auto codes = static_cast<std::size_t>(gpt.config().codes);
  std::size_t hit = 0, total = 0;
  for (const auto& t : data) {
    auto m = random_mask(t.size(), mask_rate, rng);
    if (std::none_of(m.begin(), m.end(), [](bool b) { return b; })) continue;
    Tensor logits = model.logits(gpt, {t}, {m});
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (!m[i]) continue;
      const auto row = logits.data().subspan((i + 1) * v, codes);
      const int best = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
      hit += best == t[i];
      ++total;
    }
  }
  return total == 0 ? 1.0 : static_cast<double>(hit) / static_cast<double>(total);
}

TokenSequence infill_tokens(const CrossModalGpt& gpt, const InfillModel& model,
                            const TokenSequence& tokens,
                            const std::vector<std::pair<std::size_t, int>>& keyframe_tokens,
                            std::size_t k, int refine) {
  if (keyframe_tokens.empty()) return tokens;
  const int codes = gpt.config().codes;
  std::vector<std::size_t> positions;
  TokenSequence out = tokens;
  for (std::size_t i = 0; i < keyframe_tokens.size(); ++i) {
    const auto [p, tok] = keyframe_tokens[i];
    if (i > 0 && p <= positions.back()) {
      throw std::invalid_argument("keyframe positions must be strictly increasing");
    }
    if (p >= tokens.size()) {
      throw IndexError("keyframe position " + std::to_string(p) + " outside a " +
                       std::to_string(tokens.size()) + "-token sequence");
    }
    if (tok < 0 || tok >= codes) throw IndexError("keyframe token " + std::to_string(tok) + " out of range");
    positions.push_back(p);
    out[p] = tok;
  }
  const InfillMask mask = build_infill_mask(positions, k, tokens.size());
  std::vector<bool> open = mask.predict;
  std::size_t remaining = mask.predict_count();
  NoGradGuard guard;
  const auto v = static_cast<std::size_t>(gpt.config().vocab());
  const int passes = std::max(1, refine);
  for (int pass = 0; pass < passes && remaining > 0; ++pass) {
    Tensor logits = model.logits(gpt, {out}, {open});
    std::vector<std::pair<double, std::size_t>> ranked;
    std::vector<int> best(out.size(), 0);
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (!open[i]) continue;
      const auto row = logits.data().subspan((i + 1) * v, static_cast<std::size_t>(codes));
      const auto it = std::max_element(row.begin(), row.end());
      double z = 0.0;
      for (Real x : row) z += std::exp(static_cast<double>(x - *it));
      best[i] = static_cast<int>(it - row.begin());
      ranked.emplace_back(1.0 / z, i);  // probability of the argmax
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    const std::size_t left = static_cast<std::size_t>(passes - pass);
    const std::size_t commit = pass + 1 == passes ? ranked.size() : (ranked.size() + left - 1) / left;
    for (std::size_t r = 0; r < commit; ++r) {
      const std::size_t i = ranked[r].second;
      out[i] = best[i];
      open[i] = false;
    }
    remaining -= commit;
  }
  return out;
}

TokenSequence infill(const CrossModalGpt& gpt, const InfillModel& model, const VqVae& vq,
                     const TokenSequence& tokens, const std::vector<Keyframe>& keyframes,
                     std::size_t k, int refine) {
  const auto l = static_cast<std::size_t>(vq.config().down);
  std::vector<std::pair<std::size_t, int>> kt;
  for (const auto& kf : keyframes) {
    if (kf.clip.frames != l) {
      throw ShapeError("keyframe clip at position " + std::to_string(kf.position) + " has " +
                       std::to_string(kf.clip.frames) + " frames; expected exactly " +
                       std::to_string(l));
    }
    kt.emplace_back(kf.position, vq.tokenize(kf.clip).front());
  }
  return infill_tokens(gpt, model, tokens, kt, k, refine);
}

}  // namespace CHOREO_REAL_NS
}  // namespace choreo

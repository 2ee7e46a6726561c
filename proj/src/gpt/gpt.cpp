// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#include "choreo/gpt/gpt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "choreo/util/errors.hpp"

namespace choreo {
inline namespace CHOREO_REAL_NS {

CrossModalGpt::CrossModalGpt(const GptConfig& config, std::uint64_t seed) : config_(config) {
  if (config.dim % config.heads != 0) throw ShapeError("gpt dim must be divisible by heads");
  if (config.base_layers < 1 || config.base_layers >= config.layers) {
    throw ShapeError("gpt base_layers must leave at least one head layer");
  }
  Rng rng(seed);
  const auto d = static_cast<std::size_t>(config.dim);
  tbase_ = BaseStack(config, rng);
  mbase_ = BaseStack(config, rng);
  text_table_ = init_normal({static_cast<std::size_t>(config.text_vocab), d}, Real(0.02), rng);
  start_emb_ = init_normal({1, d}, Real(0.02), rng);
  music_ = MusicEncoder(config, rng);
  head_ = Head(config, rng);
}

Tensor CrossModalGpt::t_base(const std::vector<int>& templates,
                             const std::vector<TokenSequence>& prefixes) const {
  if (templates.size() != prefixes.size() || prefixes.empty()) {
    throw ShapeError("t_base: one template per prefix required");
  }
  const std::size_t n = prefixes.front().size();
  if (n > static_cast<std::size_t>(config_.text_len)) {
    throw ShapeError("t_base: prefix of " + std::to_string(n) + " tokens exceeds T_t = " +
                     std::to_string(config_.text_len));
  }
  const std::size_t b = prefixes.size(), d = static_cast<std::size_t>(config_.dim);
  Tensor rows = reshape(embedding(text_table_, templates), {b, 1, d});
  if (n > 0) rows = concat({rows, tbase_.token_rows(prefixes)}, 1);
  return tbase_.run(rows);
}

Tensor CrossModalGpt::m_base(const Tensor& music_emb, const std::vector<TokenSequence>& prefixes,
                             const Tensor& mask_emb,
                             const std::vector<std::vector<bool>>* masked) const {
  if (prefixes.empty()) throw ShapeError("m_base: empty batch");
  const std::size_t n = prefixes.front().size();
  if (n > static_cast<std::size_t>(config_.music_len)) {
    throw ShapeError("m_base: prefix of " + std::to_string(n) + " tokens exceeds T_m = " +
                     std::to_string(config_.music_len));
  }
  const std::size_t b = prefixes.size(), d = static_cast<std::size_t>(config_.dim);
  Tensor rows = reshape(embedding(start_emb_, std::vector<int>(b, 0)), {b, 1, d});
  if (n > 0) rows = concat({rows, mbase_.token_rows(prefixes, mask_emb, masked)}, 1);
  if (music_emb.defined()) {
    if (music_emb.ndim() != 3 || music_emb.dim(0) != b || music_emb.dim(2) != d) {
      throw ShapeError("m_base: music embedding " + shape_str(music_emb.shape()) +
                       " does not match batch " + std::to_string(b) + " x dim " + std::to_string(d));
    }
    const std::size_t have = music_emb.dim(1);
    if (have < n) {
      throw ShapeError("m_base: " + std::to_string(have) + " music rows cannot cover a " +
                       std::to_string(n) + "-token prefix");
    }
    Tensor aligned = have >= n + 1
                         ? narrow(music_emb, 1, 0, n + 1)
                         : concat({music_emb, Tensor::zeros({b, n + 1 - have, d})}, 1);
    rows = add(rows, aligned);
  }
  return mbase_.run(rows);
}

Tensor CrossModalGpt::head(const Tensor& features, const AttentionOptions& opt) const {
  return head_(features, opt);
}

ParamList CrossModalGpt::text_base_params() const {
  ParamList p;
  tbase_.collect("gpt.tbase", p);
  p.add("gpt.text_table", text_table_);
  return p;
}

ParamList CrossModalGpt::music_base_params() const {
  ParamList p;
  mbase_.collect("gpt.mbase", p);
  p.add("gpt.start", start_emb_);
  music_.collect("gpt.music", p);
  return p;
}

ParamList CrossModalGpt::head_params() const {
  ParamList p;
  head_.collect("gpt.head", p);
  return p;
}

ParamList CrossModalGpt::all_params() const {
  ParamList p = text_base_params();
  p.append(music_base_params());
  p.append(head_params());
  return p;
}

Tensor recon_loss(const Tensor& logits, const std::vector<int>& targets, int pad_token) {
  const std::size_t v = logits.shape().back();
  const std::size_t rows = logits.numel() / v;
  if (rows != targets.size()) {
    throw ShapeError("recon_loss: " + std::to_string(rows) + " logit rows vs " +
                     std::to_string(targets.size()) + " targets");
  }
  std::vector<int> t(targets);
  for (auto& x : t) {
    if (x == pad_token) x = -1;
  }
  return cross_entropy(reshape(logits, {rows, v}), t, -1);
}

TokenSequence corrupt(const TokenSequence& tokens, double tau, int codes, Rng& rng) {
  TokenSequence out = tokens;
  for (auto& t : out) {
    if (rng.uniform() < tau) t = static_cast<int>(rng.below(static_cast<std::uint64_t>(codes)));
  }
  return out;
}

std::vector<int> with_end(const TokenSequence& tokens, int end_token) {
  std::vector<int> out = tokens;
  out.push_back(end_token);
  return out;
}

namespace {

double cosine_lr(double base, int step, int steps) {
  const double progress = static_cast<double>(step) / std::max(1, steps);
  return base * (0.1 + 0.45 * (1.0 + std::cos(std::numbers::pi * progress)));
}

struct Batch {
  Tensor logits;
  std::vector<int> targets;
};

Batch text_batch(const CrossModalGpt& gpt, const std::vector<const TextExample*>& ex, double tau,
                 Rng* rng) {
  std::vector<int> templates;
  std::vector<TokenSequence> inputs;
  Batch out;
  for (const auto* e : ex) {
    templates.push_back(e->template_id);
    inputs.push_back(rng ? corrupt(e->tokens, tau, gpt.config().codes, *rng) : e->tokens);
    const auto t = with_end(e->tokens, gpt.config().end_token());
    out.targets.insert(out.targets.end(), t.begin(), t.end());
  }
  out.logits = gpt.head(gpt.t_base(templates, inputs));
  return out;
}

Batch music_batch(const CrossModalGpt& gpt, const std::vector<const MusicExample*>& ex) {
  std::vector<const MusicFeatures*> music;
  std::vector<TokenSequence> inputs;
  Batch out;
  for (const auto* e : ex) {
    music.push_back(&e->music);
    inputs.push_back(e->tokens);
    const auto t = with_end(e->tokens, gpt.config().end_token());
    out.targets.insert(out.targets.end(), t.begin(), t.end());
  }
  out.logits = gpt.head(gpt.m_base(gpt.embed_music(stack_music(music)), inputs));
  return out;
}

}  // namespace

GptTrainReport alternate_train(CrossModalGpt& gpt, const std::vector<TextExample>& text,
                               const std::vector<MusicExample>& music,
                               const GptTrainConfig& config, const LogFn& log) {
  if (text.empty() || music.empty()) {
    throw DataError("alternate_train needs both a text corpus and a music corpus");
  }
  ParamList params = gpt.all_params();
  params.set_trainable(true);
  AdamWConfig oc;
  oc.lr = static_cast<float>(config.lr);
  oc.beta1 = static_cast<float>(config.beta1);
  oc.beta2 = static_cast<float>(config.beta2);
  oc.clip_norm = 1.0F;
  AdamW opt(params, oc);
  Rng rng(config.seed);

  GptTrainReport report;
  double text_avg = -1.0, music_avg = -1.0;
  for (int step = 0; step < config.steps; ++step) {
    opt.set_lr(static_cast<float>(cosine_lr(config.lr, step, config.steps)));
    const bool is_text = step % 2 == 0;
    Batch batch;
    if (is_text) {
      std::vector<const TextExample*> ex;
      for (int i = 0; i < config.batch; ++i) ex.push_back(&text[rng.below(text.size())]);
      batch = text_batch(gpt, ex, config.corrupt, &rng);
    } else {
      std::vector<const MusicExample*> ex;
      for (int i = 0; i < config.batch; ++i) ex.push_back(&music[rng.below(music.size())]);
      batch = music_batch(gpt, ex);
    }
    Tensor loss = recon_loss(batch.logits, batch.targets, gpt.config().pad_token());
    const double value = loss.item();
    if (!std::isfinite(value)) {
      throw DivergenceError("GPT loss is not finite at step " + std::to_string(step));
    }
    loss.backward();
    opt.step();
    double& avg = is_text ? text_avg : music_avg;
    avg = avg < 0 ? value : 0.9 * avg + 0.1 * value;
    report.steps = static_cast<std::size_t>(step + 1);
    if (step % 100 == 0 || step + 1 == config.steps) {
      emit(log, "gpt step " + std::to_string(step) + " text nll " + std::to_string(text_avg) +
                    " music nll " + std::to_string(music_avg));
    }
  }
  params.set_trainable(false);
  return evaluate_gpt(gpt, text, music);
}

GptTrainReport evaluate_gpt(const CrossModalGpt& gpt, const std::vector<TextExample>& text,
                            const std::vector<MusicExample>& music) {
  NoGradGuard guard;
  GptTrainReport r;
  double total = 0.0;
  for (const auto& e : text) {
    Batch b = text_batch(gpt, {&e}, 0.0, nullptr);
    total += recon_loss(b.logits, b.targets, gpt.config().pad_token()).item();
  }
  r.text_nll = text.empty() ? 0.0 : total / double(text.size());
  total = 0.0;
  for (const auto& e : music) {
    Batch b = music_batch(gpt, {&e});
    total += recon_loss(b.logits, b.targets, gpt.config().pad_token()).item();
  }
  r.music_nll = music.empty() ? 0.0 : total / double(music.size());
  return r;
}

int pick_token(std::span<const Real> logits, const GptConfig& c, bool first,
               const GenerateOptions& opt, Rng& rng) {
  const double neg_inf = -std::numeric_limits<double>::infinity();
  std::vector<double> l(logits.begin(), logits.end());
  l[static_cast<std::size_t>(c.pad_token())] = neg_inf;
  if (first) l[static_cast<std::size_t>(c.end_token())] = neg_inf;
  if (opt.decoding == Decoding::kGreedy) {
    return static_cast<int>(std::max_element(l.begin(), l.end()) - l.begin());
  }
  std::vector<int> order(l.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return l[a] > l[b]; });
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, opt.top_k)), order.size());
  std::vector<double> w(k);
  const double top = l[order[0]];
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    w[i] = std::isfinite(l[order[i]]) ? std::exp((l[order[i]] - top) / opt.temperature) : 0.0;
    total += w[i];
  }
  double r = rng.uniform() * total;
  for (std::size_t i = 0; i < k; ++i) {
    r -= w[i];
    if (r < 0.0) return order[i];
  }
  return order[0];
}

namespace {

template <typename Forward>
TokenSequence decode_loop(const CrossModalGpt& gpt, const GenerateOptions& opt, Forward forward) {
  NoGradGuard guard;
  Rng rng(opt.seed);
  TokenSequence out;
  const auto v = static_cast<std::size_t>(gpt.config().vocab());
  for (std::size_t i = 0; i < opt.max_len; ++i) {
    Tensor logits = gpt.head(forward(out));
    const auto row = logits.data().subspan(i * v, v);
    const int tok = pick_token(row, gpt.config(), i == 0, opt, rng);
    if (tok == gpt.config().end_token()) break;
    out.push_back(tok);
  }
  return out;
}

}  // namespace

TokenSequence generate(const CrossModalGpt& gpt, const Tensor& music_emb, const GenerateOptions& opt) {
  if (opt.max_len > static_cast<std::size_t>(gpt.config().music_len)) {
    throw ShapeError("generate: max_len exceeds T_m");
  }
  return decode_loop(gpt, opt, [&](const TokenSequence& prefix) {
    return gpt.m_base(music_emb, {prefix});
  });
}

TokenSequence generate_text(const CrossModalGpt& gpt, int template_id, const GenerateOptions& opt) {
  if (opt.max_len > static_cast<std::size_t>(gpt.config().text_len)) {
    throw ShapeError("generate_text: max_len exceeds T_t");
  }
  return decode_loop(gpt, opt, [&](const TokenSequence& prefix) {
    return gpt.t_base({template_id}, {prefix});
  });
}

}  // namespace CHOREO_REAL_NS
}  // namespace choreo

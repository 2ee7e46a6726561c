// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#include "choreo/vq/vqvae.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "choreo/util/errors.hpp"

namespace choreo {
inline namespace CHOREO_REAL_NS {

namespace {

constexpr Conv1dSpec kSame3{3, 1, 1, 1};
constexpr Conv1dSpec kPoint{1, 1, 0, 1};
constexpr Conv1dSpec kHalve{4, 2, 1, 1};

int levels_for(int down) {
  int levels = 0;
  while ((1 << levels) < down) ++levels;
  if ((1 << levels) != down) throw ShapeError("downsampling factor must be a power of two");
  return levels;
}

}  // namespace

VqLoss vqvae_loss(const Tensor& motion, const Tensor& recon, const Tensor& selected,
                  const Tensor& encoded, double beta) {
  if (motion.shape() != recon.shape() || selected.shape() != encoded.shape()) {
    throw ShapeError("vqvae_loss shape mismatch: motion " + shape_str(motion.shape()) + " vs " +
                     shape_str(recon.shape()) + ", codes " + shape_str(selected.shape()) +
                     " vs " + shape_str(encoded.shape()));
  }
  VqLoss out;
  out.recon = mean(abs(sub(recon, motion)));
  out.codebook = mean(square(sub(detach(selected), encoded)));
  out.commitment = scale(mean(square(sub(selected, detach(encoded)))), static_cast<Real>(beta));
  out.total = add(add(out.recon, out.codebook), out.commitment);
  return out;
}

int nearest_code(std::span<const Real> latent, std::span<const Real> codebook, std::size_t dim) {
  const std::size_t codes = codebook.size() / dim;
  if (codes == 0) throw ShapeError("quantize against an empty codebook");
  int best = 0;
  double best_d = 0.0;
  for (std::size_t k = 0; k < codes; ++k) {
    double d = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      const double diff = static_cast<double>(latent[i]) - static_cast<double>(codebook[k * dim + i]);
      d += diff * diff;
    }
    if (k == 0 || d < best_d) {
      best_d = d;
      best = static_cast<int>(k);
    }
  }
  return best;
}

ResBlock::ResBlock(std::size_t channels, Rng& rng)
    : conv3_(channels, channels, kSame3, rng), conv1_(channels, channels, kPoint, rng) {}

Tensor ResBlock::operator()(const Tensor& x) const {
  return add(x, conv1_(relu(conv3_(relu(x)))));
}

void ResBlock::collect(const std::string& prefix, ParamList& out) const {
  conv3_.collect(prefix + ".conv3", out);
  conv1_.collect(prefix + ".conv1", out);
}

VqVae::VqVae(const VqVaeConfig& config, std::uint64_t seed) : config_(config) {
  Rng rng(seed);
  const auto c = static_cast<std::size_t>(config.channels);
  const auto h = static_cast<std::size_t>(config.hidden);
  const auto d = static_cast<std::size_t>(config.dim);
  const int levels = levels_for(config.down);

  enc_in_ = Conv1d(c, h, kSame3, rng);
  for (int i = 0; i < levels; ++i) {
    enc_down_.emplace_back(h, h, kHalve, rng);
    enc_res_.emplace_back(h, rng);
  }
  enc_out_ = Conv1d(h, d, kSame3, rng);
  dec_in_ = Conv1d(d, h, kSame3, rng);
  for (int i = 0; i < levels; ++i) {
    dec_res_.emplace_back(h, rng);
    dec_up_.emplace_back(h, h, kHalve, rng);
  }
  dec_out_ = Conv1d(h, c, kSame3, rng);
  codebook_ = init_uniform({static_cast<std::size_t>(config.codes), d},
                           Real(1) / static_cast<Real>(config.codes), rng);

  enc_in_.collect("vq.enc.in", params_);
  for (int i = 0; i < levels; ++i) {
    enc_down_[i].collect("vq.enc.down" + std::to_string(i), params_);
    enc_res_[i].collect("vq.enc.res" + std::to_string(i), params_);
  }
  enc_out_.collect("vq.enc.out", params_);
  dec_in_.collect("vq.dec.in", params_);
  for (int i = 0; i < levels; ++i) {
    dec_res_[i].collect("vq.dec.res" + std::to_string(i), params_);
    dec_up_[i].collect("vq.dec.up" + std::to_string(i), params_);
  }
  dec_out_.collect("vq.dec.out", params_);
  params_.add("vq.codebook", codebook_);
  usage_.assign(static_cast<std::size_t>(config.codes), 0.0);
}

Tensor VqVae::encode(const Tensor& x) const {
  if (x.ndim() != 3 || x.dim(2) != static_cast<std::size_t>(config_.channels)) {
    throw ShapeError("encode expects [B, L, " + std::to_string(config_.channels) + "], got " +
                     shape_str(x.shape()));
  }
  if (x.dim(1) == 0 || x.dim(1) % static_cast<std::size_t>(config_.down) != 0) {
    throw ShapeError("encode: length " + std::to_string(x.dim(1)) + " is not a multiple of " +
                     std::to_string(config_.down) + "; pad or crop first");
  }
  Tensor h = relu(enc_in_(x));
  for (std::size_t i = 0; i < enc_down_.size(); ++i) h = enc_res_[i](relu(enc_down_[i](h)));
  return enc_out_(h);
}

Quantized VqVae::quantize(const Tensor& latents) const {
  const auto d = static_cast<std::size_t>(config_.dim);
  if (latents.ndim() == 0 || latents.shape().back() != d) {
    throw ShapeError("quantize expects latent dim " + std::to_string(d) + ", got " +
                     shape_str(latents.shape()));
  }
  Quantized q;
  const auto values = latents.data();
  const auto book = codebook_.data();
  const std::size_t n = latents.numel() / d;
  q.tokens.resize(n);
  for (std::size_t i = 0; i < n; ++i) q.tokens[i] = nearest_code(values.subspan(i * d, d), book, d);
  q.selected = reshape(embedding(codebook_, q.tokens), latents.shape());
  q.straight = add(latents, detach(sub(q.selected, latents)));
  return q;
}

Tensor VqVae::decode_latents(const Tensor& q) const {
  Tensor h = relu(dec_in_(q));
  for (std::size_t i = 0; i < dec_up_.size(); ++i) h = relu(dec_up_[i](dec_res_[i](h)));
  return dec_out_(h);
}

Tensor VqVae::decode(const TokenSequence& tokens) const {
  if (tokens.empty()) throw ShapeError("decode needs at least one token");
  const std::size_t t = tokens.size();
  Tensor q = reshape(embedding(codebook_, tokens), {1, t, static_cast<std::size_t>(config_.dim)});
  Tensor out = decode_latents(q);
  return reshape(out, {out.dim(1), out.dim(2)});
}

TokenSequence VqVae::tokenize(const MotionSequence& m) const {
  NoGradGuard guard;
  Tensor x = stack_motions({&m});
  return quantize(encode(x)).tokens;
}

MotionSequence VqVae::detokenize(const TokenSequence& tokens) const {
  NoGradGuard guard;
  Tensor out = decode(tokens);
  MotionSequence m(out.dim(0), out.dim(1));
  const auto v = out.data();
  for (std::size_t i = 0; i < v.size(); ++i) m.values[i] = static_cast<float>(v[i]);
  return m;
}

std::size_t VqVae::receptive_last_frame(std::size_t t) const {
  std::size_t pos = t + 1;  // output conv
  for (std::size_t i = 0; i < enc_down_.size(); ++i) {
    pos += 1;              // residual k3
    pos = 2 * pos + 2;     // k4 s2 p1
  }
  return pos + 1;  // input conv
}

Tensor stack_motions(const std::vector<const MotionSequence*>& motions) {
  if (motions.empty()) throw ShapeError("stack_motions needs at least one sequence");
  const std::size_t frames = motions.front()->frames, ch = motions.front()->channels;
  std::vector<Real> data;
  data.reserve(motions.size() * frames * ch);
  for (const auto* m : motions) {
    if (m->frames != frames || m->channels != ch) throw ShapeError("stack_motions: ragged batch");
    for (float v : m->values) data.push_back(static_cast<Real>(v));
  }
  return Tensor::from_data({motions.size(), frames, ch}, std::move(data));
}

namespace {

// k-means++ seeding over encoder outputs of the whole corpus.
void init_codebook_from_data(VqVae& model, const std::vector<const MotionSequence*>& motions,
                             Rng& rng) {
  NoGradGuard guard;
  const auto d = static_cast<std::size_t>(model.config().dim);
  std::vector<Real> pool;
  for (std::size_t i = 0; i < motions.size(); i += 16) {
    const std::vector<const MotionSequence*> chunk(
        motions.begin() + static_cast<std::ptrdiff_t>(i),
        motions.begin() + static_cast<std::ptrdiff_t>(std::min(motions.size(), i + 16)));
    Tensor z = model.encode(stack_motions(chunk));
    pool.insert(pool.end(), z.data().begin(), z.data().end());
  }
  const std::size_t n = pool.size() / d;
  auto book = model.codebook().mutable_data();
  const std::size_t codes = book.size() / d;
  auto dist2 = [&](std::size_t i, std::size_t k) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = double(pool[i * d + j]) - double(book[k * d + j]);
      s += diff * diff;
    }
    return s;
  };
  std::vector<double> nearest(n, 0.0);
  for (std::size_t k = 0; k < codes; ++k) {
    std::size_t pick = 0;
    if (k == 0) {
      pick = rng.below(n);
    } else {
      double total = 0.0;
      for (double v : nearest) total += v;
      double r = rng.uniform() * total;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        r -= nearest[i];
        if (r < 0.0) {
          pick = i;
          break;
        }
      }
    }
    for (std::size_t j = 0; j < d; ++j) book[k * d + j] = pool[pick * d + j];
    for (std::size_t i = 0; i < n; ++i) {
      const double v = dist2(i, k);
      if (k == 0 || v < nearest[i]) nearest[i] = v;
    }
  }
}

}  // namespace

VqTrainReport train_vqvae(VqVae& model, const Corpus& corpus, const VqTrainConfig& config,
                          const LogFn& log) {
  std::vector<const MotionSequence*> motions;
  for (const auto& r : corpus.records) motions.push_back(&r.motion);
  if (motions.empty()) throw DataError("train_vqvae: empty corpus");

  Rng rng(config.seed);
  const int warmup = config.init_from_data ? config.steps / 5 : 0;

  ParamList params = model.params();
  params.set_trainable(true);
  AdamWConfig opt_cfg;
  opt_cfg.lr = static_cast<float>(config.lr);
  opt_cfg.beta1 = static_cast<float>(config.beta1);
  opt_cfg.beta2 = static_cast<float>(config.beta2);
  AdamW opt(params, opt_cfg);

  VqTrainReport report;
  const auto codes = static_cast<std::size_t>(model.config().codes);
  for (int step = 0; step < config.steps; ++step) {
    const double progress = static_cast<double>(step) / std::max(1, config.steps);
    opt.set_lr(static_cast<float>(config.lr * (0.1 + 0.45 * (1.0 + std::cos(std::numbers::pi * progress)))));
    std::vector<const MotionSequence*> batch;
    for (int b = 0; b < config.batch; ++b) batch.push_back(motions[rng.below(motions.size())]);
    if (step == warmup && config.init_from_data) init_codebook_from_data(model, motions, rng);
    Tensor x = stack_motions(batch);
    Tensor z = model.encode(x);
    if (step < warmup) {
      Tensor l1 = mean(abs(sub(model.decode_latents(z), x)));
      const double value = l1.item();
      if (!std::isfinite(value)) {
        throw DivergenceError("VQ-VAE loss is not finite at step " + std::to_string(step));
      }
      l1.backward();
      opt.step();
      report.final_loss = value;
      continue;
    }
    Quantized q = model.quantize(z);
    Tensor xr = model.decode_latents(q.straight);
    VqLoss loss = vqvae_loss(x, xr, q.selected, z, model.config().beta);
    const double value = loss.total.item();
    if (!std::isfinite(value)) {
      throw DivergenceError("VQ-VAE loss is not finite at step " + std::to_string(step));
    }
    loss.total.backward();
    opt.step();

    std::vector<double> counts(codes, 0.0);
    for (int t : q.tokens) counts[static_cast<std::size_t>(t)] += 1.0;
    for (std::size_t k = 0; k < codes; ++k) {
      model.usage()[k] = 0.99 * model.usage()[k] + 0.01 * counts[k] / double(q.tokens.size());
    }
    report.final_loss = value;
    report.steps = static_cast<std::size_t>(step + 1);
    if (step % 100 == 0 || step + 1 == config.steps) {
      std::size_t live = 0;
      for (double u : model.usage()) live += u > 1e-3 ? 1 : 0;
      emit(log, "vq step " + std::to_string(step) + " loss " + std::to_string(value) + " l1 " +
                    std::to_string(loss.recon.item()) + " live codes " + std::to_string(live));
    }
  }
  params.set_trainable(false);
  const VqTrainReport eval = evaluate_vqvae(model, corpus);
  report.recon_l1 = eval.recon_l1;
  report.usage_fraction = eval.usage_fraction;
  return report;
}

VqTrainReport evaluate_vqvae(const VqVae& model, const Corpus& corpus) {
  NoGradGuard guard;
  std::vector<const MotionSequence*> motions;
  for (const auto& r : corpus.records) motions.push_back(&r.motion);
  std::set<int> used;
  double l1 = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < motions.size(); i += 16) {
    const std::vector<const MotionSequence*> chunk(
        motions.begin() + static_cast<std::ptrdiff_t>(i),
        motions.begin() + static_cast<std::ptrdiff_t>(std::min(motions.size(), i + 16)));
    Tensor x = stack_motions(chunk);
    Quantized q = model.quantize(model.encode(x));
    used.insert(q.tokens.begin(), q.tokens.end());
    Tensor xr = model.decode_latents(q.selected);
    const auto a = x.data(), b = xr.data();
    for (std::size_t j = 0; j < a.size(); ++j) l1 += std::abs(double(a[j]) - double(b[j]));
    count += a.size();
  }
  VqTrainReport r;
  r.recon_l1 = count ? l1 / double(count) : 0.0;
  r.usage_fraction = double(used.size()) / double(model.config().codes);
  return r;
}

}  // namespace CHOREO_REAL_NS
}  // namespace choreo

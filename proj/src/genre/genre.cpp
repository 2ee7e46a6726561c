// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#include "choreo/genre/genre.hpp"

#include <cmath>
#include <map>

#include "choreo/util/errors.hpp"

namespace choreo {
inline namespace CHOREO_REAL_NS {

GenreEmbeddingNet::GenreEmbeddingNet(const GenreConfig& c, Rng& rng) : config_(c) {
  const auto in = static_cast<std::size_t>(c.genres + c.z_dim);
  const auto h = static_cast<std::size_t>(c.hidden);
  fc1_ = Linear(in, h, rng);
  fc2_ = Linear(h, h, rng);
  fc3_ = Linear(h, static_cast<std::size_t>(c.rows * c.dim), rng);
  for (Real& w : fc3_.weight.mutable_data()) w *= Real(0.1);
}

Tensor GenreEmbeddingNet::batch(const std::vector<int>& genres,
                                const std::vector<std::vector<Real>>& zs) const {
  if (genres.size() != zs.size() || genres.empty()) {
    throw ShapeError("genre embedding: one z per genre label required");
  }
  const std::size_t b = genres.size();
  const auto g = static_cast<std::size_t>(config_.genres), zd = static_cast<std::size_t>(config_.z_dim);
  std::vector<Real> in(b * (g + zd), Real(0));
  for (std::size_t i = 0; i < b; ++i) {
    if (genres[i] < 0 || genres[i] >= config_.genres) {
      throw IndexError("genre " + std::to_string(genres[i]) + " outside [0, " +
                       std::to_string(config_.genres) + ")");
    }
    if (zs[i].size() != zd) throw ShapeError("genre embedding: z has the wrong size");
    Real* row = in.data() + i * (g + zd);
    row[genres[i]] = Real(1);
    std::copy(zs[i].begin(), zs[i].end(), row + g);
  }
  Tensor x = Tensor::from_data({b, g + zd}, std::move(in));
  x = leaky_relu(fc1_(x));
  x = leaky_relu(fc2_(x));
  return reshape(fc3_(x), {b, static_cast<std::size_t>(config_.rows),
                           static_cast<std::size_t>(config_.dim)});
}

GenreCode GenreEmbeddingNet::operator()(int genre, std::span<const Real> z) const {
  GenreCode code;
  code.genre = genre;
  code.z.assign(z.begin(), z.end());
  Tensor rows = batch({genre}, {code.z});
  code.rows = reshape(rows, {rows.dim(1), rows.dim(2)});
  return code;
}

void GenreEmbeddingNet::collect(const std::string& prefix, ParamList& out) const {
  fc1_.collect(prefix + ".fc1", out);
  fc2_.collect(prefix + ".fc2", out);
  fc3_.collect(prefix + ".fc3", out);
}

Tensor cross_attention(const Tensor& music, const Tensor& genre_rows, const Tensor& bias) {
  if (music.ndim() != 3) throw ShapeError("cross_attention: music must be [B, T, d]");
  const std::size_t d = music.dim(2);
  if (genre_rows.dim(genre_rows.ndim() - 1) != d) {
    throw ShapeError("cross_attention: genre rows " + shape_str(genre_rows.shape()) +
                     " do not match music " + shape_str(music.shape()));
  }
  Tensor keys_t;
  if (genre_rows.ndim() == 2) {
    keys_t = transpose(genre_rows, 0, 1);
  } else if (genre_rows.ndim() == 3 && genre_rows.dim(0) == music.dim(0)) {
    keys_t = transpose(genre_rows, 1, 2);
  } else {
    throw ShapeError("cross_attention: genre rows " + shape_str(genre_rows.shape()) +
                     " do not match music " + shape_str(music.shape()));
  }
  Tensor scores = scale(matmul(music, keys_t), Real(1) / std::sqrt(static_cast<Real>(d)));
  if (bias.defined()) scores = add(scores, bias);
  return matmul(softmax_lastdim(scores), genre_rows);
}

Discriminator::Discriminator(const GenreConfig& c, std::size_t motion_channels,
                             std::size_t music_channels, Rng& rng)
    : config_(c) {
  const auto e = static_cast<std::size_t>(c.disc_genre_dim);
  const auto h = static_cast<std::size_t>(c.disc_hidden);
  genre_table_ = init_normal({static_cast<std::size_t>(c.genres), e}, Real(1), rng);
  c1_ = Conv1d(motion_channels + music_channels + e, h, {4, 2, 1, 1}, rng);
  c2_ = Conv1d(h, h, {4, 2, 1, 1}, rng);
  c3_ = Conv1d(h, h, {3, 1, 1, 1}, rng);
  out_ = Linear(h, 1, rng);
}

Tensor Discriminator::logits(const Tensor& motion, const std::vector<int>& genres,
                             const Tensor& music) const {
  const std::size_t b = motion.dim(0), l = motion.dim(1);
  if (music.dim(0) != b || music.dim(1) != l || genres.size() != b) {
    throw ShapeError("discriminator: motion " + shape_str(motion.shape()) + " and music " +
                     shape_str(music.shape()) + " must share batch and length");
  }
  const auto e = static_cast<std::size_t>(config_.disc_genre_dim);
  Tensor g = reshape(embedding(genre_table_, genres), {b, 1, e});
  g = add(Tensor::zeros({b, l, e}), g);
  Tensor x = concat({motion, music, g}, 2);
  x = leaky_relu(c1_(x));
  x = leaky_relu(c2_(x));
  x = leaky_relu(c3_(x));
  return reshape(out_(mean_dim(x, 1)), {b});
}

Tensor Discriminator::operator()(const Tensor& motion, const std::vector<int>& genres,
                                 const Tensor& music) const {
  return sigmoid(logits(motion, genres, music));
}

void Discriminator::collect(const std::string& prefix, ParamList& out) const {
  out.add(prefix + ".genre_table", genre_table_);
  c1_.collect(prefix + ".c1", out);
  c2_.collect(prefix + ".c2", out);
  c3_.collect(prefix + ".c3", out);
  out_.collect(prefix + ".out", out);
}

double genre_objective(std::span<const double> d_real, std::span<const double> d_fake) {
  if (d_real.empty() || d_fake.empty()) throw std::invalid_argument("genre_objective: empty batch");
  double real = 0.0, fake = 0.0;
  for (double d : d_real) real += std::log(d);
  for (double d : d_fake) fake += std::log1p(-d);
  return real / static_cast<double>(d_real.size()) + fake / static_cast<double>(d_fake.size());
}

GenreControl::GenreControl(const GenreConfig& config, std::uint64_t seed) : config_(config) {
  Rng rng(seed);
  gen_ = GenreEmbeddingNet(config, rng);
  ca_bias_ = Tensor::zeros({static_cast<std::size_t>(config.rows)}, true);
  disc_ = Discriminator(config, kMotionChannels, kMusicChannels, rng);
}

Tensor GenreControl::condition(const Tensor& music_emb, const Tensor& genre_rows) const {
  if (!genre_rows.defined()) return music_emb;
  return add(music_emb, cross_attention(music_emb, genre_rows, ca_bias_));
}

std::vector<Real> GenreControl::sample_z(Rng& rng) const {
  std::vector<Real> z(static_cast<std::size_t>(config_.z_dim));
  for (Real& v : z) v = static_cast<Real>(rng.normal());
  return z;
}

ParamList GenreControl::generator_params() const {
  ParamList out;
  gen_.collect("genre.gen", out);
  out.add("genre.ca_bias", ca_bias_);
  return out;
}

ParamList GenreControl::discriminator_params() const {
  ParamList out;
  disc_.collect("genre.disc", out);
  return out;
}

ParamList GenreControl::all_params() const {
  ParamList out = generator_params();
  out.append(discriminator_params());
  return out;
}

std::vector<TokenSequence> sample_batch(const CrossModalGpt& gpt, const Tensor& music_emb,
                                        std::size_t length, const GenerateOptions& opt, Rng& rng) {
  NoGradGuard guard;
  const std::size_t b = music_emb.dim(0);
  const auto v = static_cast<std::size_t>(gpt.config().vocab());
  std::vector<TokenSequence> out(b);
  for (std::size_t i = 0; i < length; ++i) {
    Tensor logits = gpt.head(gpt.m_base(music_emb, out));
    const std::size_t rows = i + 1;
    for (std::size_t s = 0; s < b; ++s) {
      const auto row = logits.data().subspan((s * rows + i) * v, v);
      out[s].push_back(pick_token(row, gpt.config(), true, opt, rng));
    }
  }
  return out;
}

TokenSequence generate_with_genre(const CrossModalGpt& gpt, const GenreControl* ctrl,
                                  const MusicFeatures& music, int genre, const GenerateOptions& opt) {
  NoGradGuard guard;
  Tensor emb = gpt.embed_music(stack_music({&music}));
  if (ctrl != nullptr) {
    Rng zrng(Rng::mix(opt.seed ^ 0x2e2e));
    const auto z = ctrl->sample_z(zrng);
    emb = ctrl->condition(emb, ctrl->gen().batch({genre}, {z}));
  }
  return generate(gpt, emb, opt);
}

namespace {

Tensor straight_through_motion(const CrossModalGpt& gpt, const VqVae& vq, const Tensor& emb,
                               const std::vector<TokenSequence>& tokens) {
  const std::size_t b = tokens.size(), n = tokens.front().size();
  const auto codes = static_cast<std::size_t>(gpt.config().codes);
  Tensor logits = narrow(gpt.head(gpt.m_base(emb, tokens)), 1, 0, n);
  Tensor soft = narrow(softmax_lastdim(logits), 2, 0, codes);
  std::vector<Real> hard(b * n * codes, Real(0));
  for (std::size_t s = 0; s < b; ++s) {
    for (std::size_t i = 0; i < n; ++i) hard[(s * n + i) * codes + tokens[s][i]] = Real(1);
  }
  Tensor onehot = add(Tensor::from_data({b, n, codes}, std::move(hard)), sub(soft, detach(soft)));
  return vq.decode_latents(matmul(onehot, vq.codebook()));
}

}  // namespace

AdversarialBatch prepare_adversarial_batch(const CrossModalGpt& gpt, const VqVae& vq,
                                           const GenreControl& ctrl,
                                           const std::vector<const GenreExample*>& examples,
                                           const GenreTrainConfig& config, Rng& rng) {
  if (examples.empty()) throw DataError("adversarial step: empty batch");
  NoGradGuard guard;
  AdversarialBatch b;
  std::vector<const MotionSequence*> motions;
  std::vector<const MusicFeatures*> music;
  for (const auto* e : examples) {
    b.genres.push_back(e->genre);
    motions.push_back(&e->motion);
    music.push_back(&e->music);
    b.real_tokens.push_back(e->tokens);
    b.zs.push_back(ctrl.sample_z(rng));
  }
  const std::size_t n = b.real_tokens.front().size();
  b.real_motion = stack_motions(motions);
  b.music = stack_music(music);
  b.music_emb = gpt.embed_music(b.music);

  Tensor cond = ctrl.condition(b.music_emb, ctrl.gen().batch(b.genres, b.zs));
  GenerateOptions opt;
  opt.decoding = Decoding::kTopK;
  b.fake_tokens = sample_batch(gpt, cond, n, opt, rng);
  std::vector<int> flat;
  for (const auto& t : b.fake_tokens) flat.insert(flat.end(), t.begin(), t.end());
  b.fake_motion = vq.decode_latents(
      reshape(embedding(vq.codebook(), flat), {examples.size(), n, vq.codebook().dim(1)}));

  const int n_genres = ctrl.config().genres;
  if (config.mismatch_negatives && n_genres > 1) {
    std::map<int, std::vector<const GenreExample*>> by_genre;
    for (const auto* e : examples) by_genre[e->genre].push_back(e);
    std::vector<const MusicFeatures*> other_music;
    for (std::size_t i = 0; i < examples.size(); ++i) {
      int g = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_genres - 1)));
      if (g >= b.genres[i]) ++g;
      b.swapped_genres.push_back(g);
      const auto it = by_genre.find(g);
      other_music.push_back(it == by_genre.end() ? music[i]
                                                 : &it->second[rng.below(it->second.size())]->music);
    }
    b.swapped_music = stack_music(other_music);
  }
  return b;
}

namespace {

Tensor softplus_mean(const Tensor& x) { return mean(softplus(x)); }

}  // namespace

DiscriminatorLoss discriminator_loss(const GenreControl& ctrl, const AdversarialBatch& batch) {
  ctrl.generator_params().set_trainable(false);
  ctrl.discriminator_params().set_trainable(true);
  DiscriminatorLoss out;
  out.real_logits = ctrl.disc().logits(batch.real_motion, batch.genres, batch.music);
  out.fake_logits = ctrl.disc().logits(detach(batch.fake_motion), batch.genres, batch.music);
  out.loss = add(softplus_mean(scale(out.real_logits, Real(-1))), softplus_mean(out.fake_logits));
  if (!batch.swapped_genres.empty()) {
    // Real motion under a wrong label, with its own music and with music of the wrong genre.
    Tensor swap = ctrl.disc().logits(batch.real_motion, batch.swapped_genres, batch.music);
    Tensor cross = ctrl.disc().logits(batch.real_motion, batch.swapped_genres, batch.swapped_music);
    out.loss = add(out.loss, scale(add(softplus_mean(swap), softplus_mean(cross)), Real(0.5)));
  }
  return out;
}

Tensor generator_loss(const CrossModalGpt& gpt, const VqVae& vq, const GenreControl& ctrl,
                      const AdversarialBatch& batch, const GenreTrainConfig& config, double* nll) {
  ctrl.discriminator_params().set_trainable(false);
  ctrl.generator_params().set_trainable(true);
  Tensor cond = ctrl.condition(batch.music_emb, ctrl.gen().batch(batch.genres, batch.zs));
  Tensor motion = straight_through_motion(gpt, vq, cond, batch.fake_tokens);
  Tensor loss = softplus_mean(scale(ctrl.disc().logits(motion, batch.genres, batch.music), Real(-1)));
  if (!config.pure_gan && config.lambda > 0.0) {
    std::vector<int> targets;
    for (const auto& t : batch.real_tokens) {
      const auto w = with_end(t, gpt.config().end_token());
      targets.insert(targets.end(), w.begin(), w.end());
    }
    Tensor l = recon_loss(gpt.head(gpt.m_base(cond, batch.real_tokens)), targets,
                          gpt.config().pad_token());
    if (nll != nullptr) *nll = l.item();
    loss = add(loss, scale(l, static_cast<Real>(config.lambda)));
  }
  return loss;
}

AdversarialLosses adversarial_step(const CrossModalGpt& gpt, const VqVae& vq, GenreControl& ctrl,
                                   AdamW& gen_opt, AdamW& disc_opt,
                                   const std::vector<const GenreExample*>& examples,
                                   const GenreTrainConfig& config, Rng& rng) {
  const AdversarialBatch batch = prepare_adversarial_batch(gpt, vq, ctrl, examples, config, rng);
  AdversarialLosses out;
  const DiscriminatorLoss d = discriminator_loss(ctrl, batch);
  out.d_loss = d.loss.item();
  if (!std::isfinite(out.d_loss)) throw DivergenceError("discriminator loss is not finite");
  d.loss.backward();
  disc_opt.step();
  const std::size_t b = examples.size();
  for (std::size_t i = 0; i < b; ++i) {
    out.d_real += 1.0 / (1.0 + std::exp(-static_cast<double>(d.real_logits.at(i))));
    out.d_fake += 1.0 / (1.0 + std::exp(-static_cast<double>(d.fake_logits.at(i))));
  }
  out.d_real /= static_cast<double>(b);
  out.d_fake /= static_cast<double>(b);

  Tensor g = generator_loss(gpt, vq, ctrl, batch, config, &out.nll);
  out.g_loss = g.item();
  if (!std::isfinite(out.g_loss)) throw DivergenceError("generator loss is not finite");
  g.backward();
  gen_opt.step();
  ctrl.generator_params().set_trainable(false);
  return out;
}

GenreTrainReport train_genre(const CrossModalGpt& gpt, const VqVae& vq, GenreControl& ctrl,
                             const std::vector<GenreExample>& data, const GenreTrainConfig& config,
                             const LogFn& log) {
  if (data.empty()) throw DataError("train_genre: no music-paired dances");
  AdamWConfig oc;
  oc.lr = static_cast<float>(config.lr);
  oc.beta1 = 0.5F;
  oc.beta2 = 0.99F;
  oc.clip_norm = 1.0F;
  AdamW gen_opt(ctrl.generator_params(), oc);
  AdamW disc_opt(ctrl.discriminator_params(), oc);
  Rng rng(config.seed);
  GenreTrainReport report;
  for (int step = 0; step < config.steps; ++step) {
    std::vector<const GenreExample*> batch;
    for (int i = 0; i < config.batch; ++i) batch.push_back(&data[rng.below(data.size())]);
    report.curve.push_back(adversarial_step(gpt, vq, ctrl, gen_opt, disc_opt, batch, config, rng));
    if (step % 25 == 0 || step + 1 == config.steps) {
      const auto& c = report.curve.back();
      emit(log, "genre step " + std::to_string(step) + " d_loss " + std::to_string(c.d_loss) +
                    " g_loss " + std::to_string(c.g_loss) + " D(real) " + std::to_string(c.d_real) +
                    " D(fake) " + std::to_string(c.d_fake));
    }
  }
  ctrl.all_params().set_trainable(false);
  return report;
}

}  // namespace CHOREO_REAL_NS
}  // namespace choreo

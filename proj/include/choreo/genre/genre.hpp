// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "choreo/gpt/gpt.hpp"
#include "choreo/vq/vqvae.hpp"

namespace choreo {
inline namespace CHOREO_REAL_NS {

struct GenreConfig {
  int genres = 3;
  int rows = 4;  // n_g genre-token rows
  int z_dim = 16;
  int hidden = 64;
  int dim = 128;  // equals the music embedding dim
  int disc_hidden = 64;
  int disc_genre_dim = 8;
};

struct GenreCode {
  Tensor rows;  // [n_g, dim]
  int genre = 0;
  std::vector<Real> z;
};

/// Mapping network: concat(one-hot g, z) -> n_g x dim rows.
class GenreEmbeddingNet {
 public:
  GenreEmbeddingNet() = default;
  GenreEmbeddingNet(const GenreConfig& c, Rng& rng);
  GenreCode operator()(int genre, std::span<const Real> z) const;
  /// Batched: [B, n_g, dim]
  Tensor batch(const std::vector<int>& genres, const std::vector<std::vector<Real>>& zs) const;
  void collect(const std::string& prefix, ParamList& out) const;

 private:
  GenreConfig config_;
  Linear fc1_, fc2_, fc3_;
};

/// softmax(M G^T / sqrt(d) + B) G, evaluated literally. M [B, T, d],
/// G [B, n_g, d] (or [n_g, d] shared), bias [n_g] added per key; an
/// undefined bias means B = 0.
Tensor cross_attention(const Tensor& music, const Tensor& genre_rows, const Tensor& bias);

/// Dance-genre-music scorer. Inputs are stacked on the channel axis.
class Discriminator {
 public:
  Discriminator() = default;
  Discriminator(const GenreConfig& c, std::size_t motion_channels, std::size_t music_channels,
                Rng& rng);
  /// motion [B, L, C_d], music [B, L, C_m] -> logits [B]
  Tensor logits(const Tensor& motion, const std::vector<int>& genres, const Tensor& music) const;
  /// Probability in (0, 1).
  Tensor operator()(const Tensor& motion, const std::vector<int>& genres, const Tensor& music) const;
  void collect(const std::string& prefix, ParamList& out) const;

 private:
  GenreConfig config_;
  Tensor genre_table_;
  Conv1d c1_, c2_, c3_;
  Linear out_;
};

/// E[log D(real)] + E[log(1 - D(fake))], in double precision.
double genre_objective(std::span<const double> d_real, std::span<const double> d_fake);

class GenreControl {
 public:
  GenreControl(const GenreConfig& config, std::uint64_t seed);

  const GenreConfig& config() const { return config_; }
  const GenreEmbeddingNet& gen() const { return gen_; }
  const Discriminator& disc() const { return disc_; }
  const Tensor& ca_bias() const { return ca_bias_; }

  /// M + cross_attention(M, G). An undefined `genre_rows` returns M as is.
  Tensor condition(const Tensor& music_emb, const Tensor& genre_rows) const;
  /// Draws z ~ N(0, I) from `rng`.
  std::vector<Real> sample_z(Rng& rng) const;

  ParamList generator_params() const;  // GEN + cross-attention bias
  ParamList discriminator_params() const;
  ParamList all_params() const;

 private:
  GenreConfig config_;
  GenreEmbeddingNet gen_;
  Tensor ca_bias_;  // [n_g]
  Discriminator disc_;
};

struct GenreExample {
  int genre = 0;
  MotionSequence motion;  // normalised
  MusicFeatures music;
  TokenSequence tokens;
};

struct GenreTrainConfig {
  double lr = 2e-4;
  int steps = 150;
  int batch = 4;
  double lambda = 1.0;
  bool pure_gan = false;
  bool mismatch_negatives = true;
  std::uint64_t seed = 0;
};

struct AdversarialLosses {
  double d_loss = 0.0;
  double g_loss = 0.0;
  double d_real = 0.0;  // mean D on real pairs
  double d_fake = 0.0;  // mean D on generated samples
  double nll = 0.0;
};

/// Inputs shared by one discriminator and one generator update.
struct AdversarialBatch {
  std::vector<int> genres;
  Tensor real_motion;  // [B, L, C_d]
  Tensor music;        // [B, L, C_m]
  Tensor music_emb;    // [B, T, D], no history
  std::vector<std::vector<Real>> zs;
  std::vector<TokenSequence> real_tokens;
  std::vector<TokenSequence> fake_tokens;  // sampled under the current generator
  Tensor fake_motion;                      // decoded fake tokens, no history
  std::vector<int> swapped_genres;         // mismatched labels (empty: no negatives)
  Tensor swapped_music;                    // music of the swapped genre
};

AdversarialBatch prepare_adversarial_batch(const CrossModalGpt& gpt, const VqVae& vq,
                                           const GenreControl& ctrl,
                                           const std::vector<const GenreExample*>& examples,
                                           const GenreTrainConfig& config, Rng& rng);

struct DiscriminatorLoss {
  Tensor loss;
  Tensor real_logits;
  Tensor fake_logits;
};

/// -(E[log D(real)] + E[log(1 - D(fake))]) plus mismatched-genre negatives.
/// Makes D trainable and the generator read-only.
DiscriminatorLoss discriminator_loss(const GenreControl& ctrl, const AdversarialBatch& batch);

/// -E[log D(fake)] through the straight-through decoder, plus lambda x NLL
/// of the real tokens. Makes the generator trainable and D read-only.
Tensor generator_loss(const CrossModalGpt& gpt, const VqVae& vq, const GenreControl& ctrl,
                      const AdversarialBatch& batch, const GenreTrainConfig& config,
                      double* nll = nullptr);

/// One discriminator update followed by one generator update. The GPT and
/// VQ-VAE are read-only; only GEN, the cross-attention bias and D change.
AdversarialLosses adversarial_step(const CrossModalGpt& gpt, const VqVae& vq, GenreControl& ctrl,
                                   AdamW& gen_opt, AdamW& disc_opt,
                                   const std::vector<const GenreExample*>& batch,
                                   const GenreTrainConfig& config, Rng& rng);

struct GenreTrainReport {
  std::vector<AdversarialLosses> curve;
};

GenreTrainReport train_genre(const CrossModalGpt& gpt, const VqVae& vq, GenreControl& ctrl,
                             const std::vector<GenreExample>& data, const GenreTrainConfig& config,
                             const LogFn& log = {});

/// Genre-conditioned music-to-dance generation with one z per sequence.
TokenSequence generate_with_genre(const CrossModalGpt& gpt, const GenreControl* ctrl,
                                  const MusicFeatures& music, int genre, const GenerateOptions& opt);

/// Batched autoregressive sampling on conditioned music embeddings [B, T, D].
std::vector<TokenSequence> sample_batch(const CrossModalGpt& gpt, const Tensor& music_emb,
                                        std::size_t length, const GenerateOptions& opt, Rng& rng);

}  // namespace CHOREO_REAL_NS
}  // namespace choreo

// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "choreo/data/motion.hpp"
#include "choreo/tensor/nn.hpp"
#include "choreo/util/log.hpp"
#include "choreo/vq/vqvae.hpp"

namespace choreo {
inline namespace CHOREO_REAL_NS {

struct GptConfig {
  int codes = 64;  // V; vocabulary is V + 2 (END = V, PAD = V + 1)
  int layers = 4;
  int base_layers = 1;  // per base; the head has layers - base_layers
  int dim = 128;
  int heads = 4;
  int music_len = 64;  // T_m, token rows
  int text_len = 40;   // T_t
  int music_channels = static_cast<int>(kMusicChannels);
  int down = 4;  // motion frames per token
  int text_vocab = kTemplateCount;

  int end_token() const { return codes; }
  int pad_token() const { return codes + 1; }
  int vocab() const { return codes + 2; }
  int max_rows() const { return std::max(music_len, text_len) + 1; }
};

enum class AttentionMode { kCausal, kMasked };

/// Key visibility for masked attention: one flag per sequence row.
/// Row 0 (the condition slot) is always visible.
using KeyMask = std::vector<std::vector<bool>>;  // [batch][rows]

struct AttentionOptions {
  AttentionMode mode = AttentionMode::kCausal;
  const KeyMask* keys = nullptr;  // required in masked mode
  bool post_softmax = false;      // literal "softmax(...) x mask" variant
};

class SelfAttention {
 public:
  SelfAttention() = default;
  SelfAttention(std::size_t dim, std::size_t heads, Rng& rng);
  /// x [B, T, D]
  Tensor operator()(const Tensor& x, const AttentionOptions& opt) const;
  void collect(const std::string& prefix, ParamList& out) const;

 private:
  std::size_t dim_ = 0, heads_ = 0;
  Linear q_, k_, v_, o_;
  Tensor bias_;  // [H, 1, 1] learned additive score bias
};

class Block {
 public:
  Block() = default;
  Block(std::size_t dim, std::size_t heads, Rng& rng);
  Tensor operator()(const Tensor& x, const AttentionOptions& opt) const;
  void collect(const std::string& prefix, ParamList& out) const;

 private:
  LayerNorm ln1_, ln2_;
  SelfAttention attn_;
  Linear fc1_, fc2_;
};

/// Learned token + absolute position embeddings followed by causal blocks.
class BaseStack {
 public:
  BaseStack() = default;
  BaseStack(const GptConfig& c, Rng& rng);
  /// rows [B, T, D] already holding the condition slot and token embeddings.
  Tensor run(const Tensor& rows) const;
  /// [B, n, D] token embeddings, optionally with masked inputs swapped.
  Tensor token_rows(const std::vector<TokenSequence>& prefixes, const Tensor& mask_emb = {},
                    const std::vector<std::vector<bool>>* masked = nullptr) const;
  void collect(const std::string& prefix, ParamList& out) const;

  Tensor tok_emb;  // [vocab, D]
  Tensor pos_emb;  // [max_rows, D]
 private:
  std::vector<Block> blocks_;
};

class Head {
 public:
  Head() = default;
  Head(const GptConfig& c, Rng& rng);
  /// features [B, T, D] -> logits [B, T, vocab]
  Tensor operator()(const Tensor& features, const AttentionOptions& opt) const;
  void collect(const std::string& prefix, ParamList& out) const;

 private:
  std::vector<Block> blocks_;
  LayerNorm ln_f_;
  Linear out_;
};

/// Token-rate music embedding: frames pooled by `down`, then a two-layer MLP.
class MusicEncoder {
 public:
  MusicEncoder() = default;
  MusicEncoder(const GptConfig& c, Rng& rng);
  /// music [B, frames, C_m] -> [B, frames/down, D]
  Tensor operator()(const Tensor& music) const;
  void collect(const std::string& prefix, ParamList& out) const;

 private:
  std::size_t down_ = 4;
  Linear fc1_, fc2_;
};

Tensor stack_music(const std::vector<const MusicFeatures*>& music);

/// Row i of the sequence predicts token i; the final row predicts END.
class CrossModalGpt {
 public:
  CrossModalGpt(const GptConfig& config, std::uint64_t seed);

  const GptConfig& config() const { return config_; }

  /// Text features [B, n+1, D]: row 0 is the template embedding.
  Tensor t_base(const std::vector<int>& templates, const std::vector<TokenSequence>& prefixes) const;
  /// Music features [B, n+1, D]: row i adds music row i (zero past the end;
  /// an undefined `music_emb` means no music). Input tokens flagged in
  /// `masked` are replaced by `mask_emb` [1, D].
  Tensor m_base(const Tensor& music_emb, const std::vector<TokenSequence>& prefixes,
                const Tensor& mask_emb = {},
                const std::vector<std::vector<bool>>* masked = nullptr) const;
  Tensor head(const Tensor& features, const AttentionOptions& opt = {}) const;

  /// Embeds raw music frames [B, frames, C_m].
  Tensor embed_music(const Tensor& music) const { return music_(music); }

  const Head& shared_head() const { return head_; }
  BaseStack& text_base() { return tbase_; }
  BaseStack& music_base() { return mbase_; }

  ParamList text_base_params() const;
  ParamList music_base_params() const;  // includes the music encoder
  ParamList head_params() const;
  ParamList all_params() const;

 private:
  GptConfig config_;
  BaseStack tbase_, mbase_;
  Tensor text_table_;  // [text_vocab, D]
  Tensor start_emb_;   // [1, D]
  MusicEncoder music_;
  Head head_;
};

/// Mean NLL over rows whose target is not PAD. Throws std::invalid_argument
/// when nothing is supervised.
Tensor recon_loss(const Tensor& logits, const std::vector<int>& targets, int pad_token);

/// Each token independently replaced by a uniform code in [0, codes) with
/// probability tau.
TokenSequence corrupt(const TokenSequence& tokens, double tau, int codes, Rng& rng);

/// Targets for a full sequence: tokens followed by END.
std::vector<int> with_end(const TokenSequence& tokens, int end_token);

struct TextExample {
  int template_id = 0;
  TokenSequence tokens;
};

struct MusicExample {
  MusicFeatures music;
  TokenSequence tokens;
};

struct GptTrainConfig {
  double lr = 1e-3;
  double beta1 = 0.5;
  double beta2 = 0.99;
  int steps = 600;  // each step is one batch; batches alternate text, music
  int batch = 8;
  double corrupt = 0.1;
  std::uint64_t seed = 0;
};

struct GptTrainReport {
  double text_nll = 0.0;
  double music_nll = 0.0;
  std::size_t steps = 0;
};

GptTrainReport alternate_train(CrossModalGpt& gpt, const std::vector<TextExample>& text,
                               const std::vector<MusicExample>& music,
                               const GptTrainConfig& config, const LogFn& log = {});

/// Full-corpus teacher-forced NLL per modality (no corruption).
GptTrainReport evaluate_gpt(const CrossModalGpt& gpt, const std::vector<TextExample>& text,
                            const std::vector<MusicExample>& music);

enum class Decoding { kGreedy, kTopK };

struct GenerateOptions {
  std::size_t max_len = 32;
  std::uint64_t seed = 0;
  Decoding decoding = Decoding::kGreedy;
  int top_k = 8;
  double temperature = 1.0;
};

/// Chooses the next token from one row of logits. END is never chosen for
/// the first token and PAD never at all.
int pick_token(std::span<const Real> logits, const GptConfig& c, bool first,
               const GenerateOptions& opt, Rng& rng);

/// Autoregressive music-to-dance generation. `music_emb` [1, T, D] is the
/// (optionally genre-conditioned) music embedding.
TokenSequence generate(const CrossModalGpt& gpt, const Tensor& music_emb,
                       const GenerateOptions& opt);

/// Autoregressive text-to-motion generation.
TokenSequence generate_text(const CrossModalGpt& gpt, int template_id, const GenerateOptions& opt);

}  // namespace CHOREO_REAL_NS
}  // namespace choreo

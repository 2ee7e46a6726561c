// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "choreo/data/motion.hpp"
#include "choreo/tensor/nn.hpp"
#include "choreo/util/log.hpp"

namespace choreo {
inline namespace CHOREO_REAL_NS {

using TokenSequence = std::vector<int>;

struct VqVaeConfig {
  int codes = 64;
  int dim = 32;
  int hidden = 64;
  int down = 4;  // temporal downsampling l; a power of two
  int channels = static_cast<int>(kMotionChannels);
  double beta = 0.02;
};

struct Quantized {
  TokenSequence tokens;
  Tensor selected;  // codebook rows e, differentiable w.r.t. the codebook
  Tensor straight;  // encoder output + sg[e - encoder output]
};

struct VqLoss {
  Tensor total;
  Tensor recon;       // mean |M_hat - M|
  Tensor codebook;    // mean (sg[e] - e_hat)^2
  Tensor commitment;  // beta * mean (e - sg[e_hat])^2
};

/// Mean-reduced VQ objective; stop-gradients on the codebook and commitment terms.
VqLoss vqvae_loss(const Tensor& motion, const Tensor& recon, const Tensor& selected,
                  const Tensor& encoded, double beta);

/// Index of the L2-nearest codebook row (ties to the lowest index).
/// `codebook` is row-major codes x dim.
int nearest_code(std::span<const Real> latent, std::span<const Real> codebook, std::size_t dim);

class ResBlock {
 public:
  ResBlock() = default;
  ResBlock(std::size_t channels, Rng& rng);
  Tensor operator()(const Tensor& x) const;
  void collect(const std::string& prefix, ParamList& out) const;

 private:
  Conv1d conv3_, conv1_;
};

class VqVae {
 public:
  VqVae(const VqVaeConfig& config, std::uint64_t seed);

  const VqVaeConfig& config() const { return config_; }

  /// x [B, L, C] -> [B, L/l, D]. Throws ShapeError when l does not divide L.
  Tensor encode(const Tensor& x) const;
  /// latents [..., D]; flattened row order defines token order.
  Quantized quantize(const Tensor& latents) const;
  /// quantized latents [B, T, D] -> [B, T*l, C]
  Tensor decode_latents(const Tensor& q) const;
  /// Tokens -> [T*l, C] motion; throws IndexError for tokens >= V.
  Tensor decode(const TokenSequence& tokens) const;

  TokenSequence tokenize(const MotionSequence& normalized) const;
  MotionSequence detokenize(const TokenSequence& tokens) const;

  /// Encoder receptive field end: last input frame that can influence latent t.
  std::size_t receptive_last_frame(std::size_t t) const;

  Tensor& codebook() { return codebook_; }
  const Tensor& codebook() const { return codebook_; }
  const ParamList& params() const { return params_; }
  std::vector<double>& usage() { return usage_; }
  const std::vector<double>& usage() const { return usage_; }

 private:
  VqVaeConfig config_;
  Conv1d enc_in_, enc_out_;
  std::vector<Conv1d> enc_down_;
  std::vector<ResBlock> enc_res_;
  Conv1d dec_in_, dec_out_;
  std::vector<ResBlock> dec_res_;
  std::vector<ConvTranspose1d> dec_up_;
  Tensor codebook_;
  ParamList params_;
  std::vector<double> usage_;  // EMA of per-code selection frequency
};

struct VqTrainConfig {
  double lr = 2e-3;
  double beta1 = 0.9;
  double beta2 = 0.99;
  int steps = 1500;
  int batch = 8;
  bool init_from_data = true;
  std::uint64_t seed = 0;
};

struct VqTrainReport {
  double final_loss = 0.0;
  double recon_l1 = 0.0;       // mean over a full validation pass
  double usage_fraction = 0.0;  // codes selected at least once in that pass
  std::size_t steps = 0;
};

/// Trains on every record of a preprocessed corpus. Throws DivergenceError
/// on a non-finite loss.
VqTrainReport train_vqvae(VqVae& model, const Corpus& corpus, const VqTrainConfig& config,
                          const LogFn& log = {});

/// Reconstruction L1 and codebook usage over every record.
VqTrainReport evaluate_vqvae(const VqVae& model, const Corpus& corpus);

Tensor stack_motions(const std::vector<const MotionSequence*>& motions);

}  // namespace CHOREO_REAL_NS
}  // namespace choreo

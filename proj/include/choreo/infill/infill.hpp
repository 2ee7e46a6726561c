// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "choreo/gpt/gpt.hpp"
#include "choreo/vq/vqvae.hpp"

namespace choreo {
inline namespace CHOREO_REAL_NS {

/// predict[i] true: position i is regenerated; false: KNOWN.
struct InfillMask {
  std::vector<bool> predict;

  std::size_t size() const { return predict.size(); }
  std::size_t predict_count() const;
};

/// PREDICT on the k positions either side of each keyframe (clamped,
/// unioned); keyframes themselves stay KNOWN.
InfillMask build_infill_mask(const std::vector<std::size_t>& positions, std::size_t k,
                             std::size_t length);

struct Keyframe {
  std::size_t position = 0;
  MotionSequence clip;  // normalised, exactly one token of frames
};

/// Mask-attention head retrained on top of the frozen music base.
class InfillModel {
 public:
  /// Starts from a copy of the GPT's shared head.
  InfillModel(const CrossModalGpt& gpt, std::uint64_t seed);

  /// tokens [n] with `masked` inputs replaced by the MASK embedding;
  /// returns logits [B, n + 1, vocab] where row i + 1 scores token i.
  Tensor logits(const CrossModalGpt& gpt, const std::vector<TokenSequence>& tokens,
                const std::vector<std::vector<bool>>& masked) const;

  ParamList params() const;
  bool post_softmax = false;

 private:
  Head head_;
  Tensor mask_emb_;  // [1, D]
};

struct InfillTrainConfig {
  double lr = 1e-3;
  int steps = 600;
  int batch = 8;
  double mask_rate = 0.3;
  std::uint64_t seed = 0;
};

struct InfillTrainReport {
  double final_nll = 0.0;
  std::size_t skipped = 0;  // batches with no PREDICT position
};

/// Random-mask training of the infill head; every GPT parameter is frozen.
InfillTrainReport train_infill(const CrossModalGpt& gpt, InfillModel& model,
                               const std::vector<TokenSequence>& data,
                               const InfillTrainConfig& config, const LogFn& log = {});

/// Masked-position NLL for one batch, or an undefined tensor when nothing
/// is masked.
Tensor infill_loss(const CrossModalGpt& gpt, const InfillModel& model,
                   const std::vector<TokenSequence>& tokens,
                   const std::vector<std::vector<bool>>& masked);

/// Fraction of randomly masked positions recovered by one parallel pass.
double masked_recovery(const CrossModalGpt& gpt, const InfillModel& model,
                       const std::vector<TokenSequence>& data, double mask_rate, std::uint64_t seed);

/// Places `keyframe_tokens` at their positions and regenerates the PREDICT
/// window around them. `refine` passes: each pass commits the most confident
/// share of the still-open positions.
TokenSequence infill_tokens(const CrossModalGpt& gpt, const InfillModel& model,
                            const TokenSequence& tokens,
                            const std::vector<std::pair<std::size_t, int>>& keyframe_tokens,
                            std::size_t k, int refine = 2);

/// Encodes each clip with the frozen VQ-VAE, then infills.
TokenSequence infill(const CrossModalGpt& gpt, const InfillModel& model, const VqVae& vq,
                     const TokenSequence& tokens, const std::vector<Keyframe>& keyframes,
                     std::size_t k, int refine = 2);

}  // namespace CHOREO_REAL_NS
}  // namespace choreo

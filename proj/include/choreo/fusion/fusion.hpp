// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>

#include "choreo/genre/genre.hpp"

namespace choreo {
inline namespace CHOREO_REAL_NS {

enum class RampShape { kLinear, kCosine };

RampShape parse_ramp_shape(const std::string& name);

/// Text interval [start, end) in token positions.
struct FusionSchedule {
  std::size_t start = 0;
  std::size_t end = 0;
  double ramp = 0.1;
  RampShape shape = RampShape::kLinear;

  bool empty() const { return end <= start; }
};

/// Music weight w_i: 1 outside the interval, ramping to 0 inside.
double fusion_weight(std::size_t i, const FusionSchedule& s);

/// T (1 - w) + M w. Endpoints return one operand's values exactly.
Tensor fuse(const Tensor& text, const Tensor& music, double w);

struct TextPromptSpec {
  int template_id = 0;
  FusionSchedule schedule;
};

struct GenreRequest {
  const GenreControl* control = nullptr;
  int genre = 0;
};

/// Music-driven generation with an optional genre code and an optional text
/// interval. Both bases see one shared token history.
TokenSequence generate_with_text(const CrossModalGpt& gpt, const MusicFeatures& music,
                                 const GenreRequest& genre, const std::optional<TextPromptSpec>& text,
                                 const GenerateOptions& opt);

}  // namespace CHOREO_REAL_NS
}  // namespace choreo

// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#include "choreo/fusion/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "choreo/util/errors.hpp"

namespace choreo {
inline namespace CHOREO_REAL_NS {

RampShape parse_ramp_shape(const std::string& name) {
  if (name == "linear") return RampShape::kLinear;
  if (name == "cosine") return RampShape::kCosine;
  throw ConfigError("unknown fusion ramp shape '" + name + "' (expected linear or cosine)");
}

double fusion_weight(std::size_t i, const FusionSchedule& s) {
  if (s.empty() || i < s.start || i >= s.end) return 1.0;
  const double len = static_cast<double>(s.end - s.start);
  const double width = s.ramp * len;
  const double x = static_cast<double>(i - s.start);
  const double from_end = static_cast<double>(s.end - i);
  double u = 1.0;  // 1 on the plateau, 0 at the interval edges
  if (width > 0.0) u = std::min({1.0, x / width, from_end / width});
  if (s.shape == RampShape::kCosine) u = 0.5 - 0.5 * std::cos(std::numbers::pi * u);
  return 1.0 - u;
}

Tensor fuse(const Tensor& text, const Tensor& music, double w) {
  if (text.shape() != music.shape()) {
    throw ShapeError("fuse: text features " + shape_str(text.shape()) + " vs music features " +
                     shape_str(music.shape()));
  }
  if (w == 1.0) return music;
  if (w == 0.0) return text;
  return add(scale(text, static_cast<Real>(1.0 - w)), scale(music, static_cast<Real>(w)));
}

TokenSequence generate_with_text(const CrossModalGpt& gpt, const MusicFeatures& music,
                                 const GenreRequest& genre, const std::optional<TextPromptSpec>& text,
                                 const GenerateOptions& opt) {
  const auto& c = gpt.config();
  if (opt.max_len > static_cast<std::size_t>(c.music_len)) {
    throw ShapeError("generate_with_text: max_len exceeds T_m");
  }
  if (text && !text->schedule.empty() &&
      (text->schedule.end > opt.max_len || text->schedule.end - text->schedule.start >
                                               static_cast<std::size_t>(c.text_len))) {
    throw ShapeError("generate_with_text: interval [" + std::to_string(text->schedule.start) + ", " +
                     std::to_string(text->schedule.end) + ") does not fit max_len " +
                     std::to_string(opt.max_len) + " and T_t " + std::to_string(c.text_len));
  }
  NoGradGuard guard;
  Tensor emb = gpt.embed_music(stack_music({&music}));
  if (genre.control != nullptr) {
    Rng zrng(Rng::mix(opt.seed ^ 0x2e2e));
    const auto z = genre.control->sample_z(zrng);
    emb = genre.control->condition(emb, genre.control->gen().batch({genre.genre}, {z}));
  }
  Rng rng(opt.seed);
  TokenSequence out;
  const auto v = static_cast<std::size_t>(c.vocab());
  for (std::size_t i = 0; i < opt.max_len; ++i) {
    Tensor features = gpt.m_base(emb, {out});
    if (text && !text->schedule.empty() && i >= text->schedule.start) {
      // The text branch is positioned relative to the interval start.
      const std::size_t s = text->schedule.start;
      const std::size_t last = std::min(i, text->schedule.end - 1);
      TokenSequence local(out.begin() + static_cast<std::ptrdiff_t>(s),
                          out.begin() + static_cast<std::ptrdiff_t>(last));
      Tensor tf = gpt.t_base({text->template_id}, {local});
      std::vector<Tensor> rows;
      if (s > 0) rows.push_back(narrow(features, 1, 0, s));
      for (std::size_t j = s; j <= last; ++j) {
        rows.push_back(fuse(narrow(tf, 1, j - s, 1), narrow(features, 1, j, 1),
                            fusion_weight(j, text->schedule)));
      }
      if (last < i) rows.push_back(narrow(features, 1, last + 1, i - last));
      features = concat(rows, 1);
    }
    Tensor logits = gpt.head(features);
    const auto row = logits.data().subspan(i * v, v);
    const int tok = pick_token(row, c, i == 0, opt, rng);
    if (tok == c.end_token()) break;
    out.push_back(tok);
  }
  return out;
}

}  // namespace CHOREO_REAL_NS
}  // namespace choreo

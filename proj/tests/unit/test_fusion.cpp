// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <vector>

#include "choreo/fusion/fusion.hpp"
#include "choreo/tensor/ops.hpp"
#include "choreo/util/errors.hpp"
#include "doctest.h"

using namespace choreo;

namespace {

GptConfig tiny() {
  GptConfig c;
  c.codes = 16;
  c.layers = 3;
  c.dim = 32;
  c.music_len = 16;
  c.text_len = 12;
  return c;
}

}  // namespace

TEST_CASE("fusion weight schedule") {
  FusionSchedule s{10, 30, 0.1, RampShape::kLinear};
  CHECK(fusion_weight(0, s) == 1.0);
  CHECK(fusion_weight(9, s) == 1.0);
  CHECK(fusion_weight(10, s) == 1.0);
  CHECK(fusion_weight(11, s) == 0.5);
  CHECK(fusion_weight(20, s) == 0.0);
  CHECK(fusion_weight(29, s) == 0.5);
  CHECK(fusion_weight(30, s) == 1.0);
  CHECK(fusion_weight(100, s) == 1.0);
  int zeros = 0;
  for (std::size_t i = 0; i < 40; ++i) {
    const double w = fusion_weight(i, s);
    CHECK(w >= 0.0);
    CHECK(w <= 1.0);
    zeros += w == 0.0;
  }
  CHECK(zeros == 17);

  FusionSchedule wide{0, 100, 0.1, RampShape::kLinear};
  CHECK(fusion_weight(5, wide) == doctest::Approx(0.5));
  CHECK(fusion_weight(50, wide) == 0.0);
  for (std::size_t i = 1; i < 100; ++i) {
    CHECK(std::abs(fusion_weight(i, wide) - fusion_weight(i - 1, wide)) <= 0.1 + 1e-12);
  }
  wide.shape = RampShape::kCosine;
  CHECK(fusion_weight(5, wide) == doctest::Approx(0.5));
  CHECK(fusion_weight(2, wide) > 0.5);
  CHECK(fusion_weight(50, wide) == 0.0);

  FusionSchedule empty{7, 7, 0.1, RampShape::kLinear};
  for (std::size_t i = 0; i < 20; ++i) CHECK(fusion_weight(i, empty) == 1.0);
  CHECK_THROWS_AS(parse_ramp_shape("step"), ConfigError);
}

TEST_CASE("fuse endpoints are exact") {
  Rng rng(1);
  std::vector<Real> a(12), b(12);
  for (auto& x : a) x = static_cast<Real>(rng.uniform(-1, 1));
  for (auto& x : b) x = static_cast<Real>(rng.uniform(-1, 1));
  Tensor t = Tensor::from_data({3, 4}, a), m = Tensor::from_data({3, 4}, b);
  const Tensor f1 = fuse(t, m, 1.0), f0 = fuse(t, m, 0.0), fh = fuse(t, m, 0.5);
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK(f1.at(i) == m.at(i));
    CHECK(f0.at(i) == t.at(i));
    CHECK(fh.at(i) == doctest::Approx((t.at(i) + m.at(i)) / 2));
  }
  CHECK_THROWS_AS(fuse(t, Tensor::zeros({3, 5}), 0.5), ShapeError);
}

TEST_CASE("generate_with_text: empty interval collapse, prefix agreement, determinism") {
  CrossModalGpt gpt(tiny(), 2);
  const MusicFeatures m = synth_dance(0, 64, 3).music;
  const Tensor emb = gpt.embed_music(stack_music({&m}));
  for (Decoding dec : {Decoding::kGreedy, Decoding::kTopK}) {
    GenerateOptions opt;
    opt.max_len = 16;
    opt.seed = 5;
    opt.decoding = dec;
    const TokenSequence plain = generate(gpt, emb, opt);
    TextPromptSpec empty{3, {6, 6, 0.1, RampShape::kLinear}};
    CHECK(generate_with_text(gpt, m, {}, empty, opt) == plain);

    TextPromptSpec text{3, {6, 14, 0.1, RampShape::kLinear}};
    const TokenSequence fused = generate_with_text(gpt, m, {}, text, opt);
    CHECK(fused == generate_with_text(gpt, m, {}, text, opt));
    REQUIRE(fused.size() >= 6);
    REQUIRE(plain.size() >= 6);
    for (std::size_t i = 0; i < 6; ++i) CHECK(fused[i] == plain[i]);
  }
  GenerateOptions opt;
  opt.max_len = 10;
  TextPromptSpec late{1, {4, 12, 0.1, RampShape::kLinear}};
  CHECK_THROWS_AS(generate_with_text(gpt, m, {}, late, opt), ShapeError);
  opt.max_len = 16;
  TextPromptSpec wide{1, {0, 14, 0.1, RampShape::kLinear}};
  CHECK_THROWS_AS(generate_with_text(gpt, m, {}, wide, opt), ShapeError);
}

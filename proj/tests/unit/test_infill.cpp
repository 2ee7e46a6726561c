// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <set>
#include <vector>

#include "choreo/infill/infill.hpp"
#include "choreo/tensor/ops.hpp"
#include "doctest.h"

using namespace choreo;

namespace {

GptConfig tiny() {
  GptConfig c;
  c.codes = 16;
  c.layers = 3;
  c.dim = 32;
  c.music_len = 24;
  c.text_len = 24;
  return c;
}

TokenSequence random_tokens(std::size_t n, Rng& rng) {
  TokenSequence t(n);
  for (auto& x : t) x = static_cast<int>(rng.below(16));
  return t;
}

std::set<std::size_t> predicted(const InfillMask& m) {
  std::set<std::size_t> out;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m.predict[i]) out.insert(i);
  return out;
}

}  // namespace

TEST_CASE("infill mask construction") {
  CHECK(predicted(build_infill_mask({10}, 2, 20)) == std::set<std::size_t>{8, 9, 11, 12});
  CHECK(predicted(build_infill_mask({0}, 2, 20)) == std::set<std::size_t>{1, 2});
  CHECK(predicted(build_infill_mask({10, 13}, 2, 20)) == std::set<std::size_t>{8, 9, 11, 12, 14, 15});
  CHECK(predicted(build_infill_mask({19}, 3, 20)) == std::set<std::size_t>{16, 17, 18});
  CHECK(build_infill_mask({5}, 0, 10).predict_count() == 0);
  CHECK_THROWS_AS(build_infill_mask({20}, 2, 20), IndexError);
}

TEST_CASE("infill model starts from a copy of the shared head") {
  CrossModalGpt gpt(tiny(), 1);
  InfillModel model(gpt, 2);
  const ParamList mine = model.params(), theirs = gpt.head_params();
  REQUIRE(mine.size() == theirs.size() + 1);
  for (std::size_t i = 0; i < theirs.size(); ++i) {
    const auto a = mine.items()[i].tensor, b = theirs.items()[i].tensor;
    CHECK(a.id() != b.id());
    CHECK(std::equal(a.data().begin(), a.data().end(), b.data().begin()));
  }
}

TEST_CASE("preservation over 50 randomized cases") {
  CrossModalGpt gpt(tiny(), 3);
  InfillModel model(gpt, 4);
  Rng rng(5);
  int keyframe_ok = 0, outside_ok = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 8 + rng.below(17);
    const TokenSequence tokens = random_tokens(n, rng);
    std::vector<std::pair<std::size_t, int>> kf;
    std::vector<std::size_t> pos;
    for (std::size_t p = rng.below(4); p < n; p += 3 + rng.below(8)) {
      kf.emplace_back(p, static_cast<int>(rng.below(16)));
      pos.push_back(p);
    }
    const std::size_t k = rng.below(5);
    const TokenSequence out = infill_tokens(gpt, model, tokens, kf, k, 2);
    REQUIRE(out.size() == n);
    bool kf_same = true, rest_same = true;
    for (const auto& [p, t] : kf) kf_same = kf_same && out[p] == t;
    const InfillMask mask = build_infill_mask(pos, k, n);
    for (std::size_t i = 0; i < n; ++i) {
      if (!mask.predict[i] && std::find(pos.begin(), pos.end(), i) == pos.end()) {
        rest_same = rest_same && out[i] == tokens[i];
      }
      if (mask.predict[i]) CHECK(out[i] < 16);
    }
    keyframe_ok += kf_same;
    outside_ok += rest_same;
  }
  CHECK(keyframe_ok == 50);
  CHECK(outside_ok == 50);
  Rng r2(6);
  const TokenSequence t = random_tokens(12, r2);
  CHECK(infill_tokens(gpt, model, t, {}, 3) == t);
  CHECK_THROWS_AS(infill_tokens(gpt, model, t, {{5, 1}, {3, 2}}, 2), std::invalid_argument);
  CHECK_THROWS_AS(infill_tokens(gpt, model, t, {{12, 1}}, 2), IndexError);
}

TEST_CASE("later known tokens change predict-position logits") {
  CrossModalGpt gpt(tiny(), 7);
  InfillModel model(gpt, 8);
  Rng rng(9);
  TokenSequence a = random_tokens(16, rng);
  std::vector<bool> masked(16, false);
  for (std::size_t i = 4; i < 8; ++i) masked[i] = true;
  TokenSequence b = a;
  b[12] = (b[12] + 5) % 16;
  const Tensor la = model.logits(gpt, {a}, {masked}), lb = model.logits(gpt, {b}, {masked});
  const std::size_t v = static_cast<std::size_t>(gpt.config().vocab());
  double diff = 0.0;
  for (std::size_t i = 4; i < 8; ++i)
    for (std::size_t k = 0; k < v; ++k) diff += std::abs(la.at((i + 1) * v + k) - lb.at((i + 1) * v + k));
  CHECK(diff > 0.0);

  // The hidden input at a predict position has no effect.
  TokenSequence c = a;
  c[5] = (c[5] + 3) % 16;
  const Tensor lc = model.logits(gpt, {c}, {masked});
  for (std::size_t i = 0; i < la.numel(); ++i) CHECK(la.at(i) == lc.at(i));
}

TEST_CASE("infill training: bases frozen, degenerate batches skipped") {
  CrossModalGpt gpt(tiny(), 10);
  InfillModel model(gpt, 11);
  Rng rng(12);
  std::vector<TokenSequence> data;
  for (int i = 0; i < 4; ++i) data.push_back(random_tokens(12, rng));
  const std::uint64_t gpt_hash = gpt.all_params().hash();
  const std::uint64_t model_hash = model.params().hash();
  InfillTrainConfig tc;
  tc.steps = 3;
  tc.batch = 2;
  const InfillTrainReport r = train_infill(gpt, model, data, tc);
  CHECK(gpt.all_params().hash() == gpt_hash);
  CHECK(model.params().hash() != model_hash);
  CHECK(r.final_nll > 0.0);

  tc.mask_rate = 1e-12;
  int warnings = 0;
  const InfillTrainReport skipped = train_infill(gpt, model, data, tc, [&](const std::string&) { ++warnings; });
  CHECK(skipped.skipped == 3);
  CHECK(warnings == 3);
  CHECK(!infill_loss(gpt, model, {data[0]}, {std::vector<bool>(12, false)}).defined());
  CHECK_THROWS_AS(train_infill(gpt, model, {}, tc), DataError);
}

TEST_CASE("keyframe clips must span exactly one token") {
  VqVaeConfig vc;
  vc.codes = 16;
  vc.dim = 8;
  vc.hidden = 16;
  VqVae vq(vc, 1);
  CrossModalGpt gpt(tiny(), 2);
  InfillModel model(gpt, 3);
  const TokenSequence t(12, 1);
  Keyframe bad{4, MotionSequence(8, kMotionChannels)};
  CHECK_THROWS_AS(infill(gpt, model, vq, t, {bad}, 2), ShapeError);
  Keyframe good{4, MotionSequence(4, kMotionChannels)};
  const TokenSequence out = infill(gpt, model, vq, t, {good}, 2);
  CHECK(out[4] == vq.tokenize(good.clip).front());
}

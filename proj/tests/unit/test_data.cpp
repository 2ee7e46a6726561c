// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>

#include "choreo/data/motion.hpp"
#include "choreo/eval/metrics.hpp"
#include "doctest.h"

using namespace choreo;

TEST_CASE("synth_dance shape and determinism") {
  auto a = synth_dance(1, 128, 42);
  auto b = synth_dance(1, 128, 42);
  CHECK(a.motion.frames == 128);
  CHECK(a.motion.channels == 66);
  CHECK(a.music.frames == 128);
  CHECK(a.music.channels == 35);
  CHECK(a.motion == b.motion);
  CHECK(a.music == b.music);
  CHECK_FALSE(synth_dance(1, 128, 43).motion == a.motion);
  CHECK_THROWS_AS(synth_dance(3, 128, 1), DataError);
  CHECK_THROWS_AS(synth_dance(-1, 128, 1), DataError);
}

TEST_CASE("root channel spectrum tracks the genre fundamental") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::vector<double> freq;
    for (int g = 0; g < 3; ++g) {
      auto d = synth_dance(g, 128, seed);
      std::vector<float> root(128);
      for (std::size_t f = 0; f < 128; ++f) root[f] = d.motion.at(f, 0);
      freq.push_back(eval::dominant_frequency(root, 16.0));
      CHECK(eval::classify_genre(d.motion, 3) == g);
    }
    const double bin = 16.0 / 128.0;
    CHECK(std::abs((freq[1] - freq[0]) - 0.25) <= bin + 1e-12);
    CHECK(std::abs(freq[0] - 0.5) <= bin);
  }
}

TEST_CASE("beat channel fires once per period") {
  for (int g = 0; g < 3; ++g) {
    auto d = synth_dance(g, 128, 9);
    int beats = 0;
    for (std::size_t f = 0; f < 128; ++f) beats += d.music.at(f, 0) > 0.5F ? 1 : 0;
    const double expected = genre_frequency(g) * 128.0 / 16.0;
    CHECK(std::abs(beats - expected) <= 1.0);
  }
}

TEST_CASE("text templates") {
  auto m = synth_text_motion({template_id("raise-arms"), 40}, 1);
  CHECK(m.frames == 40);
  CHECK(m.channels == 66);
  const std::size_t arm = channel(Joint::kLeftWrist, 1);
  double first = 0, second = 0;
  for (std::size_t f = 0; f < 20; ++f) first += m.at(f, arm);
  for (std::size_t f = 20; f < 40; ++f) second += m.at(f, arm);
  CHECK(second > first);
  CHECK_THROWS_AS(synth_text_motion({8, 40}, 1), DataError);
  CHECK_THROWS_AS(template_id("moonwalk"), DataError);
  CHECK_FALSE(synth_text_motion({2, 48}, 1) == synth_text_motion({2, 48}, 2));
}

TEST_CASE("a fixed linear probe separates every template") {
  // Features: per-channel mean over the clip. Probe: least-squares one-hot fit.
  auto features = [](const MotionSequence& m) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(kMotionChannels + 1);
    for (std::size_t f = 0; f < m.frames; ++f) {
      for (std::size_t c = 0; c < kMotionChannels; ++c) v[Eigen::Index(c)] += m.at(f, c);
    }
    v /= double(m.frames);
    v[kMotionChannels] = 1.0;
    return v;
  };
  const std::size_t lengths[] = {40, 48, 56, 64};
  const int n = 100;
  Eigen::MatrixXd x(n, kMotionChannels + 1);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n, kTemplateCount);
  for (int i = 0; i < n; ++i) {
    const int t = i % kTemplateCount;
    x.row(i) = features(synth_text_motion({t, lengths[i % 4]}, 1000 + i)).transpose();
    y(i, t) = 1.0;
  }
  const Eigen::MatrixXd w =
      (x.transpose() * x + 1e-6 * Eigen::MatrixXd::Identity(x.cols(), x.cols())).ldlt().solve(
          x.transpose() * y);
  int correct = 0;
  for (int i = 0; i < 200; ++i) {
    const int t = i % kTemplateCount;
    Eigen::VectorXd s = w.transpose() * features(synth_text_motion({t, lengths[i % 4]}, 5000 + i));
    Eigen::Index best;
    s.maxCoeff(&best);
    correct += best == t ? 1 : 0;
  }
  CHECK(correct == 200);
}

TEST_CASE("corpus is balanced and deterministic") {
  CorpusSpec spec{3, 4, 5, 3, 7};
  Corpus c = generate_corpus(spec);
  CHECK(c.count(Modality::kMusic) == 12);
  CHECK(c.count(Modality::kText) == 15);
  std::vector<int> per_genre(3, 0), per_template(5, 0);
  for (const auto& r : c.records) {
    (r.modality == Modality::kMusic ? per_genre : per_template)[std::size_t(r.label)]++;
    if (r.modality == Modality::kMusic) CHECK(r.music.frames == r.motion.frames);
  }
  CHECK(per_genre == std::vector<int>{4, 4, 4});
  CHECK(per_template == std::vector<int>{3, 3, 3, 3, 3});
  CHECK(generate_corpus(spec) == c);
}

TEST_CASE("corpus file round trip") {
  Corpus c = generate_corpus({2, 2, 2, 2, 1});
  auto bytes = serialize_corpus(c);
  CHECK(bytes[0] == 'C');
  CHECK(bytes[3] == '1');
  CHECK(deserialize_corpus(bytes) == c);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  CHECK_THROWS_AS(deserialize_corpus(truncated), DataError);
  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(deserialize_corpus(bad), DataError);
  const auto path = std::filesystem::temp_directory_path() / "choreo_corpus_test.bin";
  save_corpus(c, path);
  CHECK(load_corpus(path) == c);
  std::filesystem::remove(path);
}

TEST_CASE("preprocess crops, repeats and normalises") {
  auto long_rec = synth_dance(0, 200, 3);
  auto cropped = crop_or_repeat(long_rec.motion);
  CHECK(cropped.frames == 128);
  CHECK(cropped.at(127, 5) == long_rec.motion.at(127, 5));
  auto exact = synth_dance(0, 128, 3).motion;
  CHECK(crop_or_repeat(exact) == exact);
  auto short_rec = synth_text_motion({0, 40}, 1);
  auto rep = crop_or_repeat(short_rec);
  CHECK(rep.at(45, 10) == short_rec.at(5, 10));
  CHECK_THROWS_AS(crop_or_repeat(synth_text_motion({0, 39}, 1)), DataError);

  Corpus raw = generate_corpus({3, 4, 5, 4, 11});
  Preprocessed p = preprocess(raw);
  for (const auto& r : p.corpus.records) {
    CHECK(r.motion.frames == 128);
    for (float v : r.motion.values) CHECK(std::abs(v) <= 10.0F);
  }
  auto orig = crop_or_repeat(raw.records[5].motion);
  auto round = p.corpus.records[5].motion;
  p.normalizer.denormalize(round);
  for (std::size_t i = 0; i < orig.values.size(); ++i) {
    CHECK(std::abs(orig.values[i] - round.values[i]) <= 1e-5F);
  }
}

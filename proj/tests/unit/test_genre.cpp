// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "choreo/genre/genre.hpp"
#include "choreo/tensor/ops.hpp"
#include "doctest.h"

using namespace choreo;

namespace {

Tensor rand_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<Real> v(shape_numel(shape));
  for (auto& x : v) x = static_cast<Real>(rng.uniform(lo, hi));
  return Tensor::from_data(std::move(shape), std::move(v));
}

GenreConfig small_genre() {
  GenreConfig c;
  c.dim = 32;
  c.hidden = 16;
  c.disc_hidden = 16;
  return c;
}

// Dense double-precision softmax(M G^T / sqrt(d) + B) G for one batch item.
std::vector<double> dense_oracle(const Tensor& m, const Tensor& g, const std::vector<double>& bias,
                                 std::size_t b) {
  const std::size_t t = m.dim(1), d = m.dim(2), n = g.dim(1);
  std::vector<double> out(t * d, 0.0);
  for (std::size_t i = 0; i < t; ++i) {
    std::vector<double> s(n);
    for (std::size_t j = 0; j < n; ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < d; ++k) dot += static_cast<double>(m.at((b * t + i) * d + k)) * g.at((b * n + j) * d + k);
      s[j] = dot / std::sqrt(static_cast<double>(d)) + bias[j];
    }
    const double top = *std::max_element(s.begin(), s.end());
    double z = 0.0;
    for (auto& x : s) z += (x = std::exp(x - top));
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < d; ++k) out[i * d + k] += s[j] / z * g.at((b * n + j) * d + k);
  }
  return out;
}

}  // namespace

TEST_CASE("genre embedding: determinism, z sensitivity, row dim") {
  Rng rng(1);
  GenreEmbeddingNet net(small_genre(), rng);
  std::vector<Real> z1(16), z2(16);
  for (auto& v : z1) v = static_cast<Real>(rng.normal());
  for (auto& v : z2) v = static_cast<Real>(rng.normal());
  const GenreCode a = net(1, z1), b = net(1, z1), c = net(1, z2);
  CHECK(a.rows.shape() == Shape{4, 32});
  double diff = 0.0;
  for (std::size_t i = 0; i < a.rows.numel(); ++i) {
    CHECK(a.rows.at(i) == b.rows.at(i));
    diff += std::pow(a.rows.at(i) - c.rows.at(i), 2);
  }
  CHECK(diff > 0.0);
  CHECK_THROWS_AS(net(3, z1), IndexError);
  CHECK_THROWS_AS(net(-1, z1), IndexError);
}

TEST_CASE("cross-attention matches a dense oracle") {
  Rng rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    Tensor m = rand_tensor({2, 7, 8}, rng), g = rand_tensor({2, 3, 8}, rng);
    std::vector<double> bias{0.3, -0.2, 0.7};
    Tensor bt = Tensor::from_data({3}, {0.3F, -0.2F, 0.7F});
    const Tensor out = cross_attention(m, g, bt);
    for (std::size_t b = 0; b < 2; ++b) {
      const auto ref = dense_oracle(m, g, bias, b);
      for (std::size_t i = 0; i < ref.size(); ++i) CHECK(std::abs(out.at(b * ref.size() + i) - ref[i]) <= 1e-6);
    }
  }
}

TEST_CASE("cross-attention degenerate key set and permutation symmetry") {
  Rng rng(3);
  Tensor m = rand_tensor({1, 5, 6}, rng), g1 = rand_tensor({1, 6}, rng);
  const Tensor one = cross_attention(m, g1, Tensor());
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t k = 0; k < 6; ++k) CHECK(one.at(i * 6 + k) == doctest::Approx(g1.at(k)).epsilon(1e-6));

  Tensor g = rand_tensor({3, 6}, rng);
  std::vector<Real> perm(18);
  const int order[3] = {2, 0, 1};
  for (int r = 0; r < 3; ++r)
    for (int k = 0; k < 6; ++k) perm[static_cast<std::size_t>(r * 6 + k)] = g.at(static_cast<std::size_t>(order[r] * 6 + k));
  const Tensor a = cross_attention(m, g, Tensor());
  const Tensor b = cross_attention(m, Tensor::from_data({3, 6}, perm), Tensor());
  for (std::size_t i = 0; i < a.numel(); ++i) CHECK(std::abs(a.at(i) - b.at(i)) <= 1e-6);

  CHECK_THROWS_AS(cross_attention(m, rand_tensor({3, 5}, rng), Tensor()), ShapeError);
}

TEST_CASE("cross-attention rows lie in the convex hull of the genre rows") {
  Rng rng(4);
  Tensor m = rand_tensor({1, 9, 8}, rng, -3, 3), g = rand_tensor({3, 8}, rng);
  Tensor bias = Tensor::full({3}, 0.4F);
  const Tensor out = cross_attention(m, g, bias);
  Eigen::MatrixXd gt(8, 3);
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 8; ++k) gt(k, j) = g.at(static_cast<std::size_t>(j * 8 + k));
  for (int i = 0; i < 9; ++i) {
    Eigen::VectorXd y(8);
    for (int k = 0; k < 8; ++k) y(k) = out.at(static_cast<std::size_t>(i * 8 + k));
    const Eigen::VectorXd w = gt.colPivHouseholderQr().solve(y);
    CHECK((gt * w - y).norm() < 1e-5);
    CHECK(std::abs(w.sum() - 1.0) < 1e-5);
    CHECK(w.minCoeff() > -1e-5);
  }
}

TEST_CASE("condition without a genre code is the identity") {
  GenreControl ctrl(small_genre(), 5);
  Rng rng(6);
  Tensor m = rand_tensor({1, 4, 32}, rng);
  CHECK(ctrl.condition(m, Tensor()).id() == m.id());
}

TEST_CASE("discriminator output is a finite probability; bad genre rejected") {
  GenreConfig c = small_genre();
  Rng rng(7);
  Discriminator d(c, kMotionChannels, kMusicChannels, rng);
  Tensor motion = rand_tensor({3, 32, kMotionChannels}, rng, -5, 5);
  Tensor music = rand_tensor({3, 32, kMusicChannels}, rng);
  const Tensor p = d(motion, {0, 1, 2}, music);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(std::isfinite(p.at(i)));
    CHECK(p.at(i) > 0.0F);
    CHECK(p.at(i) < 1.0F);
  }
  CHECK_THROWS_AS(d(motion, {0, 1, 3}, music), IndexError);
  CHECK_THROWS_AS(d(motion, {0, 1, 2}, rand_tensor({3, 16, kMusicChannels}, rng)), ShapeError);
}

TEST_CASE("genre objective closed forms") {
  const std::vector<double> half(4, 0.5);
  CHECK(std::abs(genre_objective(half, half) - 2.0 * std::log(0.5)) < 1e-9);
  for (double c : {0.1, 0.3, 0.77}) {
    const std::vector<double> d(5, c);
    CHECK(std::abs(genre_objective(d, d) - (std::log(c) + std::log(1.0 - c))) < 1e-12);
  }
  const std::vector<double> real(3, 1.0 - 1e-12), fake(3, 1e-12);
  const double perfect = genre_objective(real, fake);
  CHECK(perfect < 0.0);
  CHECK(perfect > -1e-9);
}

TEST_CASE("adversarial gradient isolation and frozen upstream stages") {
  VqVaeConfig vc;
  vc.codes = 16;
  vc.dim = 8;
  vc.hidden = 16;
  VqVae vq(vc, 1);
  ParamList vq_params = vq.params();
  vq_params.set_trainable(false);
  GptConfig gc;
  gc.codes = 16;
  gc.layers = 2;
  gc.dim = 32;
  gc.music_len = 20;
  gc.text_len = 20;
  CrossModalGpt gpt(gc, 2);
  gpt.all_params().set_trainable(false);
  GenreControl ctrl(small_genre(), 3);

  std::vector<GenreExample> data;
  for (int i = 0; i < 4; ++i) {
    const DancePair d = synth_dance(i % 3, 64, 10 + static_cast<std::uint64_t>(i));
    data.push_back({i % 3, d.motion, d.music, vq.tokenize(d.motion)});
  }
  std::vector<const GenreExample*> batch;
  for (const auto& e : data) batch.push_back(&e);
  GenreTrainConfig tc;
  Rng rng(4);
  const AdversarialBatch ab = prepare_adversarial_batch(gpt, vq, ctrl, batch, tc, rng);
  CHECK(ab.fake_tokens.size() == 4);
  CHECK(ab.fake_motion.shape() == ab.real_motion.shape());
  CHECK(ab.swapped_genres.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(ab.swapped_genres[i] != ab.genres[i]);

  ctrl.all_params().set_trainable(true);
  discriminator_loss(ctrl, ab).loss.backward();
  CHECK(ctrl.generator_params().grads_all_zero());
  CHECK_FALSE(ctrl.discriminator_params().grads_all_zero());
  ctrl.all_params().zero_grad();

  ctrl.all_params().set_trainable(true);
  generator_loss(gpt, vq, ctrl, ab, tc).backward();
  CHECK(ctrl.discriminator_params().grads_all_zero());
  CHECK_FALSE(ctrl.generator_params().grads_all_zero());
  CHECK(gpt.all_params().grads_all_zero());
  CHECK(vq.params().grads_all_zero());
  ctrl.all_params().zero_grad();

  const std::uint64_t gpt_hash = gpt.all_params().hash(), vq_hash = vq.params().hash();
  const std::uint64_t gen_hash = ctrl.generator_params().hash(), disc_hash = ctrl.discriminator_params().hash();
  AdamWConfig oc;
  oc.lr = 1e-3F;
  AdamW gen_opt(ctrl.generator_params(), oc), disc_opt(ctrl.discriminator_params(), oc);
  const AdversarialLosses l = adversarial_step(gpt, vq, ctrl, gen_opt, disc_opt, batch, tc, rng);
  CHECK(std::isfinite(l.d_loss));
  CHECK(std::isfinite(l.g_loss));
  CHECK(l.nll > 0.0);
  CHECK(gpt.all_params().hash() == gpt_hash);
  CHECK(vq.params().hash() == vq_hash);
  CHECK(ctrl.generator_params().hash() != gen_hash);
  CHECK(ctrl.discriminator_params().hash() != disc_hash);
}

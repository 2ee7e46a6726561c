// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#include "choreo/eval/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "choreo/util/rng.hpp"

namespace choreo::eval {

FeatureVector kinetic_features(const MotionSequence& m) {
  if (m.frames < 2) throw MetricError("kinetic features need at least two frames");
  if (m.channels != kMotionChannels) throw MetricError("kinetic features need 22x3 channels");
  FeatureVector out(kJoints, 0.0);
  const double fps = m.fps;
  for (std::size_t f = 1; f < m.frames; ++f) {
    for (std::size_t j = 0; j < kJoints; ++j) {
      double e = 0.0;
      for (std::size_t a = 0; a < 3; ++a) {
        const double v = (double(m.at(f, j * 3 + a)) - m.at(f - 1, j * 3 + a)) * fps;
        e += v * v;
      }
      out[j] += e;
    }
  }
  for (auto& v : out) v /= static_cast<double>(m.frames - 1);
  return out;
}

std::vector<bool> geometric_predicates(std::span<const float> p) {
  auto x = [&](Joint j) { return double(p[channel(j, 0)]); };
  auto y = [&](Joint j) { return double(p[channel(j, 1)]); };
  auto z = [&](Joint j) { return double(p[channel(j, 2)]); };
  const double hand_gap = std::hypot(x(Joint::kLeftWrist) - x(Joint::kRightWrist),
                                     y(Joint::kLeftWrist) - y(Joint::kRightWrist),
                                     z(Joint::kLeftWrist) - z(Joint::kRightWrist));
  return {
      y(Joint::kLeftWrist) > y(Joint::kHead),
      y(Joint::kRightWrist) > y(Joint::kHead),
      y(Joint::kLeftWrist) > y(Joint::kLeftShoulder),
      y(Joint::kRightWrist) > y(Joint::kRightShoulder),
      z(Joint::kLeftWrist) > z(Joint::kPelvis) + 0.2,
      z(Joint::kRightWrist) > z(Joint::kPelvis) + 0.2,
      y(Joint::kLeftAnkle) > 0.2,
      y(Joint::kRightAnkle) > 0.2,
      z(Joint::kLeftKnee) > z(Joint::kPelvis) + 0.15,
      z(Joint::kRightKnee) > z(Joint::kPelvis) + 0.15,
      y(Joint::kPelvis) < 0.75,
      z(Joint::kHead) > z(Joint::kPelvis) + 0.2,
      std::abs(x(Joint::kLeftWrist) - x(Joint::kRightWrist)) > 0.8,
      hand_gap < 0.2,
      y(Joint::kPelvis) > 1.1,
      std::abs(z(Joint::kLeftShoulder) - z(Joint::kRightShoulder)) > 0.2,
  };
}

FeatureVector geometric_features(const MotionSequence& m) {
  if (m.channels != kMotionChannels) throw MetricError("geometric features need 22x3 channels");
  FeatureVector out(kGeometricDim, 0.0);
  if (m.frames == 0) return out;
  for (std::size_t f = 0; f < m.frames; ++f) {
    const auto pred = geometric_predicates(m.row(f));
    for (std::size_t i = 0; i < kGeometricDim; ++i) out[i] += pred[i] ? 1.0 : 0.0;
  }
  for (auto& v : out) v /= static_cast<double>(m.frames);
  return out;
}

GaussianStats GaussianStats::fit(const std::vector<FeatureVector>& features) {
  if (features.size() < 2) throw MetricError("Gaussian fit needs at least two feature vectors");
  const std::size_t d = features.front().size();
  GaussianStats s;
  s.count = features.size();
  s.mean.assign(d, 0.0);
  for (const auto& f : features) {
    if (f.size() != d) throw MetricError("feature vectors differ in dimension");
    for (std::size_t i = 0; i < d; ++i) s.mean[i] += f[i];
  }
  for (auto& v : s.mean) v /= static_cast<double>(s.count);
  s.cov.assign(d * d, 0.0);
  for (const auto& f : features) {
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) s.cov[i * d + j] += (f[i] - s.mean[i]) * (f[j] - s.mean[j]);
    }
  }
  for (auto& v : s.cov) v /= static_cast<double>(s.count - 1);
  return s;
}

namespace {

using Mat = Eigen::MatrixXd;

Mat sym_sqrt(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(a);
  Eigen::VectorXd ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) ev[i] = ev[i] < 1e-10 ? 0.0 : std::sqrt(ev[i]);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double fid(const GaussianStats& a, const GaussianStats& b) {
  if (a.dim() != b.dim()) {
    throw MetricError("FID dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                      std::to_string(b.dim()));
  }
  const auto d = static_cast<Eigen::Index>(a.dim());
  const Mat sa = Eigen::Map<const Mat>(a.cov.data(), d, d);
  const Mat sb = Eigen::Map<const Mat>(b.cov.data(), d, d);
  double mean_term = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) mean_term += (a.mean[i] - b.mean[i]) * (a.mean[i] - b.mean[i]);

  const Mat root_a = sym_sqrt(0.5 * (sa + sa.transpose()));
  Mat inner = root_a * sb * root_a;
  inner = 0.5 * (inner + inner.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(inner, Eigen::EigenvaluesOnly);
  double tr_sqrt = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    const double ev = es.eigenvalues()[i];
    if (ev >= 1e-10) tr_sqrt += std::sqrt(ev);
  }
  const double value = mean_term + sa.trace() + sb.trace() - 2.0 * tr_sqrt;
  return std::max(0.0, value);
}

namespace {

double distance(const FeatureVector& a, const FeatureVector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

double diversity(const std::vector<FeatureVector>& features, std::size_t pairs, std::uint64_t seed) {
  const std::size_t n = features.size();
  if (n < 2) throw MetricError("diversity needs at least two feature vectors");
  if (pairs == 0) throw MetricError("diversity needs at least one pair");
  const std::size_t all = n * (n - 1) / 2;
  double total = 0.0;
  if (pairs >= all) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) total += distance(features[i], features[j]);
    }
    return total / static_cast<double>(all);
  }
  Rng rng(seed);
  for (std::size_t p = 0; p < pairs; ++p) {
    const std::size_t i = rng.below(n);
    std::size_t j = rng.below(n - 1);
    if (j >= i) ++j;
    total += distance(features[i], features[j]);
  }
  return total / static_cast<double>(pairs);
}

namespace {

double power_at(std::span<const float> signal, double mean, double cycles_per_sample) {
  double re = 0.0, im = 0.0;
  for (std::size_t t = 0; t < signal.size(); ++t) {
    const double ang = 2.0 * std::numbers::pi * cycles_per_sample * static_cast<double>(t);
    re += (signal[t] - mean) * std::cos(ang);
    im -= (signal[t] - mean) * std::sin(ang);
  }
  return re * re + im * im;
}

double mean_of(std::span<const float> s) {
  double m = 0.0;
  for (float v : s) m += v;
  return s.empty() ? 0.0 : m / static_cast<double>(s.size());
}

}  // namespace

double dominant_frequency(std::span<const float> signal, double fps) {
  const std::size_t n = signal.size();
  if (n < 4) throw MetricError("spectrum needs at least four samples");
  const double mean = mean_of(signal);
  std::size_t best = 1;
  double best_power = -1.0;
  for (std::size_t k = 1; k <= n / 2; ++k) {
    const double p = power_at(signal, mean, static_cast<double>(k) / static_cast<double>(n));
    if (p > best_power) {
      best_power = p;
      best = k;
    }
  }
  return static_cast<double>(best) * fps / static_cast<double>(n);
}

int classify_genre(const MotionSequence& m, int n_genres) {
  std::vector<float> root(m.frames);
  for (std::size_t f = 0; f < m.frames; ++f) root[f] = m.at(f, channel(Joint::kPelvis, 0));
  const double mean = mean_of(root);
  int best = 0;
  double best_power = -1.0;
  for (int g = 0; g < n_genres; ++g) {
    const double p = power_at(root, mean, genre_frequency(g) / m.fps);
    if (p > best_power) {
      best_power = p;
      best = g;
    }
  }
  return best;
}

}  // namespace choreo::eval

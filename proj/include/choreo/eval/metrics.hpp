// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "choreo/data/motion.hpp"

namespace choreo::eval {

class MetricError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using FeatureVector = std::vector<double>;

inline constexpr std::size_t kKineticDim = kJoints;
inline constexpr std::size_t kGeometricDim = 16;

/// Per-joint mean squared velocity (units/s)^2 over consecutive frames.
FeatureVector kinetic_features(const MotionSequence& m);

/// Fraction of frames satisfying each of 16 pose relations. Expects
/// un-normalised joint positions.
FeatureVector geometric_features(const MotionSequence& m);
/// Evaluates every relation on one frame.
std::vector<bool> geometric_predicates(std::span<const float> pose);

struct GaussianStats {
  std::vector<double> mean;
  std::vector<double> cov;  // row-major dim x dim
  std::size_t count = 0;

  std::size_t dim() const { return mean.size(); }
  /// Unbiased covariance; needs at least two vectors.
  static GaussianStats fit(const std::vector<FeatureVector>& features);
};

/// Frechet distance between two Gaussians; covariance square roots via
/// symmetric eigendecomposition with eigenvalues below 1e-10 clamped.
double fid(const GaussianStats& a, const GaussianStats& b);

/// Mean Euclidean distance over `pairs` seeded random index pairs (i != j).
/// When `pairs` covers every unordered pair, the exhaustive mean is used.
double diversity(const std::vector<FeatureVector>& features, std::size_t pairs, std::uint64_t seed);

/// Frequency (Hz) of the strongest non-DC DFT bin.
double dominant_frequency(std::span<const float> signal, double fps);
/// Genre whose fundamental carries the most energy in the root sway channel.
int classify_genre(const MotionSequence& m, int n_genres);

}  // namespace choreo::eval

// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numbers>

#include "choreo/data/motion.hpp"
#include "choreo/util/rng.hpp"

namespace choreo {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::size_t kActionFrames = 16;

// Genre g has fundamental (2 + g) / 4 Hz, i.e. (2 + g) cycles per 64 frames.
constexpr std::int64_t kCycleFrames = 64;

struct GenreStyle {
  std::vector<double> amp, harm, phase, harm_phase;
  std::vector<double> band;  // music band weights, channels 1..34
  std::vector<int> band_order;
};

GenreStyle genre_style(int genre) {
  Rng rng(Rng::mix(0x5eed0000ULL + static_cast<std::uint64_t>(genre)));
  GenreStyle s;
  for (std::size_t c = 0; c < kMotionChannels; ++c) {
    s.amp.push_back(rng.uniform(0.04, 0.2));
    s.harm.push_back(rng.uniform(0.0, 0.5) * s.amp.back());
    s.phase.push_back(rng.uniform(0.0, kTwoPi));
    s.harm_phase.push_back(rng.uniform(0.0, kTwoPi));
  }
  // The root sway carries the pure fundamental.
  const std::size_t root = channel(Joint::kPelvis, 0);
  s.amp[root] = 0.25;
  s.harm[root] = 0.0;
  s.phase[root] = 0.0;
  for (std::size_t c = 1; c < kMusicChannels; ++c) {
    s.band.push_back(rng.uniform(0.2, 1.0));
    s.band_order.push_back(1 + static_cast<int>(rng.below(2)));
  }
  return s;
}

}  // namespace

std::vector<GenreLabel> genre_catalog(int n_genres) {
  static const char* kNames[] = {
      "popping", "locking", "breaking", "krump", "house", "waacking", "hiphop", "jazz",
      "ballet", "kpop", "dunhuang", "tai", "dai", "miao", "hanfu", "korean", "urban",
      "choreography", "chinese", "uyghur", "mongolian", "classical"};
  std::vector<GenreLabel> out;
  for (int g = 0; g < n_genres; ++g) {
    out.push_back({g, g < 22 ? kNames[g] : "genre" + std::to_string(g)});
  }
  return out;
}

double genre_frequency(int genre) { return 0.5 + 0.25 * genre; }

const std::vector<std::string>& template_names() {
  static const std::vector<std::string> kNames{"raise-arms", "walk-forward", "spin", "crouch",
                                               "wave",       "kick",         "jump", "bow"};
  return kNames;
}

int template_id(const std::string& name) {
  const auto& names = template_names();
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw DataError("unknown text template '" + name + "'");
  return static_cast<int>(it - names.begin());
}

const std::vector<float>& rest_pose() {
  static const std::vector<float> kPose{
      0.00F,  0.95F, 0.00F,  0.09F,  0.88F, 0.00F,  -0.09F, 0.88F, 0.00F,  0.00F,  1.05F,
      0.00F,  0.10F, 0.50F,  0.02F,  -0.10F, 0.50F, 0.02F,  0.00F, 1.18F,  0.00F,  0.10F,
      0.08F,  -0.02F, -0.10F, 0.08F, -0.02F, 0.00F, 1.25F,  0.00F, 0.10F,  0.02F,  0.10F,
      -0.10F, 0.02F, 0.10F,  0.00F,  1.45F, 0.00F,  0.08F,  1.40F, 0.00F,  -0.08F, 1.40F,
      0.00F,  0.00F, 1.60F,  0.02F,  0.18F, 1.40F,  0.00F,  -0.18F, 1.40F, 0.00F,  0.25F,
      1.15F,  0.00F, -0.25F, 1.15F,  0.00F, 0.30F,  0.90F,  0.02F, -0.30F, 0.90F,  0.02F};
  return kPose;
}

DancePair synth_dance(int genre, std::size_t frames, std::uint64_t seed, int n_genres) {
  if (genre < 0 || genre >= n_genres) {
    throw DataError("unknown genre id " + std::to_string(genre) + " (have " +
                    std::to_string(n_genres) + ")");
  }
  if (frames < 8) throw DataError("synth_dance needs at least 8 frames");
  const GenreStyle style = genre_style(genre);
  Rng rng(seed);
  // Phase offsets are whole 4-frame steps so every clip starts on the token grid.
  const std::int64_t shift = 4 * static_cast<std::int64_t>(rng.below(16));
  std::vector<double> jitter(kMotionChannels);
  for (auto& j : jitter) j = 1.0 + rng.uniform(-0.05, 0.05);

  const std::int64_t cycles = 2 + genre;
  auto theta = [&](std::int64_t t) {
    return kTwoPi * static_cast<double>(cycles * (t + shift) % kCycleFrames) / kCycleFrames;
  };

  DancePair out{MotionSequence(frames, kMotionChannels), MusicFeatures(frames, kMusicChannels)};
  const auto& rest = rest_pose();
  for (std::size_t f = 0; f < frames; ++f) {
    const double th = theta(static_cast<std::int64_t>(f));
    for (std::size_t c = 0; c < kMotionChannels; ++c) {
      const double v = rest[c] + style.amp[c] * jitter[c] * std::sin(th + style.phase[c]) +
                       style.harm[c] * jitter[c] * std::sin(2.0 * th + style.harm_phase[c]);
      out.motion.at(f, c) = static_cast<float>(v);
    }
    const std::int64_t t = static_cast<std::int64_t>(f) + shift;
    const bool beat = t * cycles % kCycleFrames < cycles;
    out.music.at(f, 0) = beat ? 1.0F : 0.0F;
    const double envelope = 0.5 + 0.5 * std::cos(th);
    for (std::size_t c = 1; c < kMusicChannels; ++c) {
      const double e = style.band_order[c - 1] == 1 ? envelope : 0.5 + 0.5 * std::cos(2.0 * th);
      const double v = style.band[c - 1] * (0.3 + 0.7 * e) + 0.02 * rng.normal();
      out.music.at(f, c) = static_cast<float>(v);
    }
  }
  return out;
}

namespace {

struct Offset {
  double x = 0, y = 0, z = 0;
};

void displace(MotionSequence& m, std::size_t f, Joint j, Offset o, double scale) {
  m.at(f, channel(j, 0)) += static_cast<float>(o.x * scale);
  m.at(f, channel(j, 1)) += static_cast<float>(o.y * scale);
  m.at(f, channel(j, 2)) += static_cast<float>(o.z * scale);
}

constexpr Joint kUpper[] = {Joint::kSpine3, Joint::kNeck, Joint::kLeftCollar, Joint::kRightCollar,
                            Joint::kHead, Joint::kLeftShoulder, Joint::kRightShoulder,
                            Joint::kLeftElbow, Joint::kRightElbow, Joint::kLeftWrist,
                            Joint::kRightWrist};
constexpr Joint kLegs[] = {Joint::kLeftKnee, Joint::kRightKnee, Joint::kLeftAnkle,
                           Joint::kRightAnkle, Joint::kLeftFoot, Joint::kRightFoot};

bool is_left(Joint j) {
  return j == Joint::kLeftKnee || j == Joint::kLeftAnkle || j == Joint::kLeftFoot;
}

}  // namespace

MotionSequence synth_text_motion(const TextPrompt& prompt, std::uint64_t seed) {
  if (prompt.template_id < 0 || prompt.template_id >= kTemplateCount) {
    throw DataError("unknown text template id " + std::to_string(prompt.template_id));
  }
  if (prompt.frames < 1) throw DataError("text motion needs at least one frame");
  Rng rng(seed);
  const double gain = 1.0 + rng.uniform(-0.01, 0.01);
  const std::size_t onset = 4 * rng.below(3);
  const auto& rest = rest_pose();
  MotionSequence m(prompt.frames, kMotionChannels);
  const auto tmpl = static_cast<Template>(prompt.template_id);

  for (std::size_t f = 0; f < prompt.frames; ++f) {
    for (std::size_t c = 0; c < kMotionChannels; ++c) m.at(f, c) = rest[c];
    const double tau =
        f < onset ? 0.0 : std::min(1.0, static_cast<double>(f - onset) / kActionFrames);
    const double ramp = gain * (0.5 - 0.5 * std::cos(std::numbers::pi * tau));
    const double bump = gain * std::sin(std::numbers::pi * tau);
    const double swing = gain * std::sin(2.0 * kTwoPi * tau);

    switch (tmpl) {
      case Template::kRaiseArms:
        displace(m, f, Joint::kLeftElbow, {0.05, 0.35, 0}, ramp);
        displace(m, f, Joint::kRightElbow, {-0.05, 0.35, 0}, ramp);
        displace(m, f, Joint::kLeftWrist, {0.0, 0.75, 0}, ramp);
        displace(m, f, Joint::kRightWrist, {0.0, 0.75, 0}, ramp);
        break;
      case Template::kWalkForward:
        for (std::size_t j = 0; j < kJoints; ++j) displace(m, f, Joint(j), {0, 0, 0.8}, ramp);
        for (Joint j : kLegs) displace(m, f, j, {0, 0, is_left(j) ? 0.15 : -0.15}, swing);
        break;
      case Template::kSpin: {
        const double angle = std::numbers::pi * ramp;
        const double ca = std::cos(angle), sa = std::sin(angle);
        for (std::size_t j = 0; j < kJoints; ++j) {
          const double x = rest[j * 3], z = rest[j * 3 + 2];
          m.at(f, j * 3) = static_cast<float>(ca * x + sa * z);
          m.at(f, j * 3 + 2) = static_cast<float>(-sa * x + ca * z);
        }
        break;
      }
      case Template::kCrouch:
        for (std::size_t j = 0; j < kJoints; ++j) {
          const Joint jj = Joint(j);
          if (rest[j * 3 + 1] > 0.7F) displace(m, f, jj, {0, -0.35, 0}, ramp);
        }
        displace(m, f, Joint::kLeftKnee, {0, -0.15, 0.2}, ramp);
        displace(m, f, Joint::kRightKnee, {0, -0.15, 0.2}, ramp);
        break;
      case Template::kWave:
        displace(m, f, Joint::kRightElbow, {-0.1, 0.3, 0}, ramp);
        displace(m, f, Joint::kRightWrist, {-0.05, 0.65, 0}, ramp);
        displace(m, f, Joint::kRightWrist, {0.15, 0, 0}, swing);
        break;
      case Template::kKick:
        displace(m, f, Joint::kRightKnee, {0, 0.15, 0.3}, bump);
        displace(m, f, Joint::kRightAnkle, {0, 0.3, 0.6}, bump);
        displace(m, f, Joint::kRightFoot, {0, 0.3, 0.65}, bump);
        break;
      case Template::kJump:
        for (std::size_t j = 0; j < kJoints; ++j) displace(m, f, Joint(j), {0, 0.4, 0}, bump);
        break;
      case Template::kBow:
        for (Joint j : kUpper) {
          const double h = rest[static_cast<std::size_t>(j) * 3 + 1] - 1.05;
          displace(m, f, j, {0, -0.6 * h, 0.9 * h}, ramp);
        }
        break;
    }
  }
  return m;
}

}  // namespace choreo

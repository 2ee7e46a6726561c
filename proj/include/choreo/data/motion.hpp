// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace choreo {

inline constexpr std::size_t kJoints = 22;
inline constexpr std::size_t kMotionChannels = kJoints * 3;
inline constexpr std::size_t kMusicChannels = 35;
inline constexpr int kFps = 16;
inline constexpr std::size_t kMinFrames = 40;
inline constexpr std::size_t kClipFrames = 128;

class DataError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// frames x channels, row-major.
struct Matrix {
  std::size_t frames = 0;
  std::size_t channels = 0;
  std::vector<float> values;

  Matrix() = default;
  Matrix(std::size_t f, std::size_t c) : frames(f), channels(c), values(f * c, 0.0F) {}

  float& at(std::size_t f, std::size_t c) { return values[f * channels + c]; }
  float at(std::size_t f, std::size_t c) const { return values[f * channels + c]; }
  std::span<const float> row(std::size_t f) const { return {values.data() + f * channels, channels}; }
  bool operator==(const Matrix&) const = default;
};

/// Joint positions (x, y, z per joint; y is up).
struct MotionSequence : Matrix {
  using Matrix::Matrix;
  int fps = kFps;
  bool operator==(const MotionSequence&) const = default;
};

struct MusicFeatures : Matrix {
  using Matrix::Matrix;
};

enum class Joint : std::size_t {
  kPelvis = 0, kLeftHip, kRightHip, kSpine1, kLeftKnee, kRightKnee, kSpine2, kLeftAnkle,
  kRightAnkle, kSpine3, kLeftFoot, kRightFoot, kNeck, kLeftCollar, kRightCollar, kHead,
  kLeftShoulder, kRightShoulder, kLeftElbow, kRightElbow, kLeftWrist, kRightWrist,
};

inline constexpr std::size_t channel(Joint j, std::size_t axis) {
  return static_cast<std::size_t>(j) * 3 + axis;
}

// --- labels ---------------------------------------------------------------

struct GenreLabel {
  int id = 0;
  std::string name;
};

/// Genre names for a preset size (3 at desk scale, 22 at paper scale).
std::vector<GenreLabel> genre_catalog(int n_genres);
/// Fundamental frequency of a genre in Hz.
double genre_frequency(int genre);

enum class Template : int {
  kRaiseArms = 0, kWalkForward, kSpin, kCrouch, kWave, kKick, kJump, kBow,
};
inline constexpr int kTemplateCount = 8;

const std::vector<std::string>& template_names();
/// Throws DataError for an unknown name.
int template_id(const std::string& name);

struct TextPrompt {
  int template_id = 0;
  std::size_t frames = 64;
};

// --- synthesis ------------------------------------------------------------

struct DancePair {
  MotionSequence motion;
  MusicFeatures music;
};

DancePair synth_dance(int genre, std::size_t frames, std::uint64_t seed, int n_genres = 3);
MotionSequence synth_text_motion(const TextPrompt& prompt, std::uint64_t seed);

/// Rest pose in metres, kJoints*3 values.
const std::vector<float>& rest_pose();

// --- corpus ---------------------------------------------------------------

enum class Modality : std::uint8_t { kMusic = 0, kText = 1 };

struct MotionRecord {
  Modality modality = Modality::kMusic;
  int label = 0;  // genre id or template id
  MotionSequence motion;
  MusicFeatures music;  // empty for text-paired records
  bool operator==(const MotionRecord&) const = default;
};

struct Corpus {
  std::vector<MotionRecord> records;

  std::size_t count(Modality m) const;
  bool operator==(const Corpus&) const = default;
};

struct CorpusSpec {
  int genres = 3;
  int per_genre = 32;
  int templates = 5;
  int per_template = 32;
  std::uint64_t seed = 0;
};

/// Balanced raw corpus of mixed-length records.
Corpus generate_corpus(const CorpusSpec& spec);

struct Normalizer {
  std::vector<float> mean;
  std::vector<float> stddev;

  /// Per-channel statistics over every motion frame of the corpus.
  static Normalizer fit(const Corpus& corpus, float std_floor = 1e-2F);
  void normalize(MotionSequence& m) const;
  void denormalize(MotionSequence& m) const;
};

/// Self-repeats records shorter than `length` and keeps the leading window.
/// Throws DataError for records below the minimum length.
MotionSequence crop_or_repeat(const MotionSequence& m, std::size_t length = kClipFrames);
MusicFeatures crop_or_repeat(const MusicFeatures& m, std::size_t length = kClipFrames);

/// Fixed-length, z-normalised corpus plus the statistics used.
struct Preprocessed {
  Corpus corpus;
  Normalizer normalizer;
};
Preprocessed preprocess(const Corpus& raw, std::size_t length = kClipFrames);

// --- corpus file ("CHR1") ---------------------------------------------------

std::vector<std::uint8_t> serialize_corpus(const Corpus& corpus);
Corpus deserialize_corpus(const std::vector<std::uint8_t>& bytes);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
Corpus load_corpus(const std::filesystem::path& path);

}  // namespace choreo

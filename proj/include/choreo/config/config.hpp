// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "choreo/util/errors.hpp"

namespace choreo {

struct RunConfig {
  std::string preset = "desk";
  std::uint64_t seed = 7;

  // data
  int genres = 3;
  int per_genre = 32;
  int templates = 5;
  int per_template = 32;
  int clip_frames = 128;

  // motion VQ-VAE
  int vq_codes = 64;
  int vq_dim = 32;
  int vq_hidden = 64;
  int vq_down = 4;
  double vq_beta = 0.02;
  double vq_lr = 1e-3;
  double vq_beta1 = 0.9;
  double vq_beta2 = 0.99;
  int vq_steps = 1500;
  int vq_batch = 8;
  bool vq_init_from_data = true;

  // cross-modal GPT
  int gpt_layers = 4;
  int gpt_base_layers = 1;
  int gpt_dim = 128;
  int gpt_heads = 4;
  int gpt_music_len = 64;
  int gpt_text_len = 40;
  double gpt_lr = 1e-3;
  double gpt_beta1 = 0.5;
  double gpt_beta2 = 0.99;
  int gpt_steps = 600;
  int gpt_batch = 8;
  double gpt_corrupt = 0.1;

  // genre control
  int genre_rows = 4;
  int genre_z = 16;
  int genre_hidden = 64;
  double genre_lambda = 1.0;
  bool genre_pure_gan = false;
  bool genre_mismatch_negatives = true;
  double genre_lr = 2e-4;
  int genre_steps = 150;
  int genre_batch = 4;

  // text fusion
  double fusion_ramp = 0.1;
  std::string fusion_shape = "linear";

  // keyframe infill
  int infill_k = 6;
  double infill_mask_rate = 0.3;
  int infill_steps = 600;
  double infill_lr = 1e-3;
  int infill_refine = 2;
  bool infill_post_softmax = false;

  // evaluation
  int eval_samples = 30;
  int eval_pairs = 100;

  /// Sets `key` from text; throws ConfigError for unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  static const std::vector<std::string>& keys();

  /// Overwrites every preset-controlled field; other fields are kept.
  void apply_preset(const std::string& name);
  /// `key=value` lines; '#' starts a comment. A `preset` line is applied first.
  void merge_text(const std::string& text);
  void merge_file(const std::filesystem::path& path);

  /// Every key, one `key=value` per line, in declaration order.
  std::string to_text() const;
  void validate() const;
};

}  // namespace choreo

// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "choreo/config/config.hpp"
#include "choreo/fusion/fusion.hpp"
#include "choreo/genre/genre.hpp"
#include "choreo/infill/infill.hpp"
#include "choreo/io/checkpoint.hpp"

namespace choreo {
inline namespace CHOREO_REAL_NS {

namespace fs = std::filesystem;

enum class Stage { kData = 0, kVq = 1, kGpt = 2, kGenre = 3, kInfill = 4 };

const char* stage_tag(Stage s);
std::string artifact_name(Stage s);  // corpus.chr, vq.ckpt, ...

/// Throws StageError naming the stage when `path` is absent or holds a
/// different stage.
Checkpoint require_checkpoint(const fs::path& path, Stage stage, const std::string& needed_by);
Corpus require_corpus(const fs::path& path, const std::string& needed_by);

VqVaeConfig vq_config(const RunConfig& c);
GptConfig gpt_config(const RunConfig& c);
GenreConfig genre_config(const RunConfig& c);

struct LoadedVq {
  RunConfig config;
  std::unique_ptr<VqVae> model;
  Normalizer normalizer;
};

struct LoadedGpt {
  RunConfig config;
  std::unique_ptr<CrossModalGpt> model;
};

struct LoadedGenre {
  RunConfig config;
  std::unique_ptr<GenreControl> model;
};

/// The infill checkpoint carries the frozen GPT it was trained against.
struct LoadedInfill {
  RunConfig config;
  std::unique_ptr<CrossModalGpt> gpt;
  std::unique_ptr<InfillModel> model;
};

LoadedVq load_vq(const fs::path& path, const std::string& needed_by = "this command");
LoadedGpt load_gpt(const fs::path& path, const std::string& needed_by = "this command");
LoadedGenre load_genre(const fs::path& path, const std::string& needed_by = "this command");
LoadedInfill load_infill(const fs::path& path, const std::string& needed_by = "this command");

/// Cropped, z-normalised copy of the corpus under a fixed normaliser.
Corpus normalize_corpus(const Corpus& raw, const Normalizer& n, std::size_t frames);

// --- stages; each writes exactly one artifact -------------------------------

Corpus stage_data(const RunConfig& c, const fs::path& out);
VqTrainReport stage_vq(const RunConfig& c, const fs::path& corpus, const fs::path& out,
                       const LogFn& log = {});
GptTrainReport stage_gpt(const RunConfig& c, const fs::path& corpus, const fs::path& vq,
                         const fs::path& out, const LogFn& log = {});
GenreTrainReport stage_genre(const RunConfig& c, const fs::path& corpus, const fs::path& vq,
                             const fs::path& gpt, const fs::path& out, const LogFn& log = {});
InfillTrainReport stage_infill(const RunConfig& c, const fs::path& corpus, const fs::path& vq,
                               const fs::path& gpt, const fs::path& out, const LogFn& log = {});

// --- token files ------------------------------------------------------------

struct TokenFile {
  TokenSequence tokens;
  std::string meta;  // JSON object text
};

void save_tokens(const fs::path& path, const TokenSequence& tokens, const std::string& meta_json = "{}");
TokenFile load_tokens(const fs::path& path);

/// Decoded, de-normalised motion.
MotionSequence decode_motion(const LoadedVq& vq, const TokenSequence& tokens);
/// Writes `<stem>.chr` (one record) and `<stem>.csv` (frame + 66 channels).
void export_motion(const MotionSequence& motion, const fs::path& stem);

// --- evaluation -------------------------------------------------------------

struct EvalRow {
  std::string set;
  double fid_k = 0, fid_g = 0, div_k = 0, div_g = 0;
  std::size_t n_gen = 0, n_ref = 0;
  std::uint64_t seed = 0;
};

EvalRow evaluate_set(const std::string& name, const std::vector<MotionSequence>& generated,
                     const std::vector<MotionSequence>& reference, std::size_t pairs,
                     std::uint64_t seed);
void write_eval_csv(const fs::path& path, const std::vector<EvalRow>& rows);

/// Held-out music for generation; genre g gets its own seed stream.
DancePair heldout_dance(const RunConfig& c, int genre, std::size_t index);

struct PipelineResult {
  std::vector<fs::path> artifacts;
  std::vector<fs::path> outputs;
};

/// Data, VQ-VAE, GPT, genre and infill stages, then sample generation and
/// evaluation, all under `dir`.
PipelineResult run_pipeline(const RunConfig& c, const fs::path& dir, const LogFn& log = {});

}  // namespace CHOREO_REAL_NS
}  // namespace choreo

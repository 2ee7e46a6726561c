// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#include "choreo/pipeline/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "choreo/eval/metrics.hpp"
#include "choreo/util/errors.hpp"

namespace choreo {
inline namespace CHOREO_REAL_NS {

namespace {

constexpr const char* kTags[] = {"data", "vq", "gpt", "genre", "infill"};

std::uint64_t stage_seed(const RunConfig& c, Stage s) {
  return Rng::mix(c.seed * 0x100 + static_cast<std::uint64_t>(s));
}

Checkpoint make_checkpoint(const RunConfig& c, Stage s) {
  Checkpoint ck;
  ck.stage = stage_tag(s);
  ck.config = c.to_text();
  ck.seed = c.seed;
  return ck;
}

RunConfig config_of(const Checkpoint& ck) {
  RunConfig c;
  c.merge_text(ck.config);
  return c;
}

void store_vector(Checkpoint& ck, const std::string& name, const std::vector<float>& v) {
  ck.tensors[name] = StoredTensor{{v.size()}, v};
}

}  // namespace

const char* stage_tag(Stage s) { return kTags[static_cast<int>(s)]; }

std::string artifact_name(Stage s) {
  return s == Stage::kData ? "corpus.chr" : std::string(stage_tag(s)) + ".ckpt";
}

Checkpoint require_checkpoint(const fs::path& path, Stage stage, const std::string& needed_by) {
  const std::string what = "requires stage " + std::to_string(static_cast<int>(stage)) +
                           " checkpoint (" + artifact_name(stage) + ")";
  if (!fs::exists(path)) {
    throw StageError(needed_by + " " + what + "; not found at " + path.string());
  }
  Checkpoint ck;
  try {
    ck = Checkpoint::load(path);
  } catch (const CheckpointError& e) {
    throw StageError(needed_by + " " + what + "; " + path.string() + " is unreadable: " + e.what());
  }
  if (ck.stage != stage_tag(stage)) {
    throw StageError(needed_by + " " + what + "; " + path.string() + " holds stage '" + ck.stage + "'");
  }
  return ck;
}

Corpus require_corpus(const fs::path& path, const std::string& needed_by) {
  if (!fs::exists(path)) {
    throw StageError(needed_by + " requires stage 0 output (corpus.chr); not found at " + path.string());
  }
  return load_corpus(path);
}

VqVaeConfig vq_config(const RunConfig& c) {
  VqVaeConfig v;
  v.codes = c.vq_codes;
  v.dim = c.vq_dim;
  v.hidden = c.vq_hidden;
  v.down = c.vq_down;
  v.beta = c.vq_beta;
  return v;
}

GptConfig gpt_config(const RunConfig& c) {
  GptConfig g;
  g.codes = c.vq_codes;
  g.layers = c.gpt_layers;
  g.base_layers = c.gpt_base_layers;
  g.dim = c.gpt_dim;
  g.heads = c.gpt_heads;
  g.music_len = c.gpt_music_len;
  g.text_len = c.gpt_text_len;
  g.down = c.vq_down;
  return g;
}

GenreConfig genre_config(const RunConfig& c) {
  GenreConfig g;
  g.genres = c.genres;
  g.rows = c.genre_rows;
  g.z_dim = c.genre_z;
  g.hidden = c.genre_hidden;
  g.dim = c.gpt_dim;
  return g;
}

LoadedVq load_vq(const fs::path& path, const std::string& needed_by) {
  const Checkpoint ck = require_checkpoint(path, Stage::kVq, needed_by);
  LoadedVq out;
  out.config = config_of(ck);
  out.model = std::make_unique<VqVae>(vq_config(out.config), 0);
  ParamList params = out.model->params();
  params.load(ck);
  const auto& usage = ck.get("vq.usage").values;
  out.model->usage().assign(usage.begin(), usage.end());
  out.normalizer.mean = ck.get("norm.mean").values;
  out.normalizer.stddev = ck.get("norm.std").values;
  return out;
}

LoadedGpt load_gpt(const fs::path& path, const std::string& needed_by) {
  const Checkpoint ck = require_checkpoint(path, Stage::kGpt, needed_by);
  LoadedGpt out;
  out.config = config_of(ck);
  out.model = std::make_unique<CrossModalGpt>(gpt_config(out.config), 0);
  out.model->all_params().load(ck);
  out.model->all_params().set_trainable(false);
  return out;
}

LoadedGenre load_genre(const fs::path& path, const std::string& needed_by) {
  const Checkpoint ck = require_checkpoint(path, Stage::kGenre, needed_by);
  LoadedGenre out;
  out.config = config_of(ck);
  out.model = std::make_unique<GenreControl>(genre_config(out.config), 0);
  out.model->all_params().load(ck);
  out.model->all_params().set_trainable(false);
  return out;
}

LoadedInfill load_infill(const fs::path& path, const std::string& needed_by) {
  const Checkpoint ck = require_checkpoint(path, Stage::kInfill, needed_by);
  LoadedInfill out;
  out.config = config_of(ck);
  out.gpt = std::make_unique<CrossModalGpt>(gpt_config(out.config), 0);
  out.gpt->all_params().load(ck);
  out.gpt->all_params().set_trainable(false);
  out.model = std::make_unique<InfillModel>(*out.gpt, 0);
  out.model->params().load(ck);
  out.model->params().set_trainable(false);
  out.model->post_softmax = out.config.infill_post_softmax;
  return out;
}

Corpus normalize_corpus(const Corpus& raw, const Normalizer& n, std::size_t frames) {
  Corpus out;
  for (const auto& r : raw.records) {
    MotionRecord rec = r;
    rec.motion = crop_or_repeat(r.motion, frames);
    n.normalize(rec.motion);
    if (r.modality == Modality::kMusic) rec.music = crop_or_repeat(r.music, frames);
    out.records.push_back(std::move(rec));
  }
  return out;
}

Corpus stage_data(const RunConfig& c, const fs::path& out) {
  c.validate();
  CorpusSpec spec;
  spec.genres = c.genres;
  spec.per_genre = c.per_genre;
  spec.templates = c.templates;
  spec.per_template = c.per_template;
  spec.seed = stage_seed(c, Stage::kData);
  Corpus corpus = generate_corpus(spec);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_corpus(corpus, out);
  return corpus;
}

VqTrainReport stage_vq(const RunConfig& c, const fs::path& corpus, const fs::path& out,
                       const LogFn& log) {
  c.validate();
  const Corpus raw = require_corpus(corpus, "train-vqvae");
  const Preprocessed p = preprocess(raw, static_cast<std::size_t>(c.clip_frames));
  VqVae vq(vq_config(c), stage_seed(c, Stage::kVq));
  VqTrainConfig tc;
  tc.lr = c.vq_lr;
  tc.beta1 = c.vq_beta1;
  tc.beta2 = c.vq_beta2;
  tc.steps = c.vq_steps;
  tc.batch = c.vq_batch;
  tc.init_from_data = c.vq_init_from_data;
  tc.seed = stage_seed(c, Stage::kVq) + 1;
  const VqTrainReport report = train_vqvae(vq, p.corpus, tc, log);
  Checkpoint ck = make_checkpoint(c, Stage::kVq);
  vq.params().store(ck);
  store_vector(ck, "vq.usage", std::vector<float>(vq.usage().begin(), vq.usage().end()));
  store_vector(ck, "norm.mean", p.normalizer.mean);
  store_vector(ck, "norm.std", p.normalizer.stddev);
  ck.save(out);
  emit(log, "vq: recon L1 " + std::to_string(report.recon_l1) + ", codebook usage " +
                std::to_string(report.usage_fraction) + " -> " + out.string());
  return report;
}

namespace {

struct Tokenized {
  std::vector<TextExample> text;
  std::vector<MusicExample> music;
  std::vector<GenreExample> genre;
};

Tokenized tokenize_corpus(const Corpus& raw, const LoadedVq& vq, std::size_t frames) {
  const Corpus norm = normalize_corpus(raw, vq.normalizer, frames);
  Tokenized out;
  for (const auto& r : norm.records) {
    TokenSequence t = vq.model->tokenize(r.motion);
    if (r.modality == Modality::kText) {
      out.text.push_back({r.label, std::move(t)});
    } else {
      out.music.push_back({r.music, t});
      out.genre.push_back({r.label, r.motion, r.music, std::move(t)});
    }
  }
  return out;
}

void check_compatible(const RunConfig& have, const RunConfig& want, const std::string& what) {
  if (have.vq_codes != want.vq_codes || have.vq_down != want.vq_down ||
      have.gpt_dim != want.gpt_dim || have.clip_frames != want.clip_frames) {
    throw ConfigError(what + " was trained with an incompatible configuration (codes " +
                      std::to_string(have.vq_codes) + ", dim " + std::to_string(have.gpt_dim) + ")");
  }
}

}  // namespace

GptTrainReport stage_gpt(const RunConfig& c, const fs::path& corpus, const fs::path& vq_path,
                         const fs::path& out, const LogFn& log) {
  c.validate();
  const Corpus raw = require_corpus(corpus, "train-gpt");
  const LoadedVq vq = load_vq(vq_path, "train-gpt");
  check_compatible(vq.config, c, vq_path.string());
  const Tokenized data = tokenize_corpus(raw, vq, static_cast<std::size_t>(c.clip_frames));
  CrossModalGpt gpt(gpt_config(c), stage_seed(c, Stage::kGpt));
  GptTrainConfig tc;
  tc.lr = c.gpt_lr;
  tc.beta1 = c.gpt_beta1;
  tc.beta2 = c.gpt_beta2;
  tc.steps = c.gpt_steps;
  tc.batch = c.gpt_batch;
  tc.corrupt = c.gpt_corrupt;
  tc.seed = stage_seed(c, Stage::kGpt) + 1;
  const GptTrainReport report = alternate_train(gpt, data.text, data.music, tc, log);
  Checkpoint ck = make_checkpoint(c, Stage::kGpt);
  gpt.all_params().store(ck);
  ck.save(out);
  emit(log, "gpt: text nll " + std::to_string(report.text_nll) + ", music nll " +
                std::to_string(report.music_nll) + " -> " + out.string());
  return report;
}

GenreTrainReport stage_genre(const RunConfig& c, const fs::path& corpus, const fs::path& vq_path,
                             const fs::path& gpt_path, const fs::path& out, const LogFn& log) {
  c.validate();
  const LoadedGpt gpt = load_gpt(gpt_path, "train-genre");
  const LoadedVq vq = load_vq(vq_path, "train-genre");
  const Corpus raw = require_corpus(corpus, "train-genre");
  check_compatible(gpt.config, c, gpt_path.string());
  const std::uint64_t vq_hash = vq.model->params().hash();
  const std::uint64_t gpt_hash = gpt.model->all_params().hash();
  const Tokenized data = tokenize_corpus(raw, vq, static_cast<std::size_t>(c.clip_frames));
  GenreControl ctrl(genre_config(c), stage_seed(c, Stage::kGenre));
  GenreTrainConfig tc;
  tc.lr = c.genre_lr;
  tc.steps = c.genre_steps;
  tc.batch = c.genre_batch;
  tc.lambda = c.genre_lambda;
  tc.pure_gan = c.genre_pure_gan;
  tc.mismatch_negatives = c.genre_mismatch_negatives;
  tc.seed = stage_seed(c, Stage::kGenre) + 1;
  GenreTrainReport report = train_genre(*gpt.model, *vq.model, ctrl, data.genre, tc, log);
  if (vq.model->params().hash() != vq_hash || gpt.model->all_params().hash() != gpt_hash) {
    throw std::logic_error("genre training modified a frozen VQ-VAE or GPT parameter");
  }
  Checkpoint ck = make_checkpoint(c, Stage::kGenre);
  ctrl.all_params().store(ck);
  ck.save(out);
  emit(log, "genre -> " + out.string());
  return report;
}

InfillTrainReport stage_infill(const RunConfig& c, const fs::path& corpus, const fs::path& vq_path,
                               const fs::path& gpt_path, const fs::path& out, const LogFn& log) {
  c.validate();
  const LoadedGpt gpt = load_gpt(gpt_path, "train-infill");
  const LoadedVq vq = load_vq(vq_path, "train-infill");
  const Corpus raw = require_corpus(corpus, "train-infill");
  check_compatible(gpt.config, c, gpt_path.string());
  const std::uint64_t gpt_hash = gpt.model->all_params().hash();
  const Tokenized data = tokenize_corpus(raw, vq, static_cast<std::size_t>(c.clip_frames));
  std::vector<TokenSequence> tokens;
  for (const auto& e : data.music) tokens.push_back(e.tokens);
  for (const auto& e : data.text) tokens.push_back(e.tokens);
  InfillModel model(*gpt.model, stage_seed(c, Stage::kInfill));
  model.post_softmax = c.infill_post_softmax;
  InfillTrainConfig tc;
  tc.lr = c.infill_lr;
  tc.steps = c.infill_steps;
  tc.mask_rate = c.infill_mask_rate;
  tc.seed = stage_seed(c, Stage::kInfill) + 1;
  InfillTrainReport report = train_infill(*gpt.model, model, tokens, tc, log);
  if (gpt.model->all_params().hash() != gpt_hash) {
    throw std::logic_error("infill training modified a frozen GPT parameter");
  }
  Checkpoint ck = make_checkpoint(c, Stage::kInfill);
  gpt.model->all_params().store(ck);
  model.params().store(ck);
  ck.save(out);
  emit(log, "infill: masked nll " + std::to_string(report.final_nll) + " -> " + out.string());
  return report;
}

void save_tokens(const fs::path& path, const TokenSequence& tokens, const std::string& meta_json) {
  nlohmann::ordered_json j;
  j["tokens"] = tokens;
  j["meta"] = nlohmann::ordered_json::parse(meta_json);
  const std::string text = j.dump(1) + "\n";
  write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

TokenFile load_tokens(const fs::path& path) {
  const auto bytes = read_file(path);
  TokenFile out;
  try {
    const auto j = nlohmann::json::parse(bytes.begin(), bytes.end());
    out.tokens = j.at("tokens").get<TokenSequence>();
    out.meta = j.contains("meta") ? j["meta"].dump() : "{}";
  } catch (const nlohmann::json::exception& e) {
    throw DataError("token file " + path.string() + ": " + e.what());
  }
  return out;
}

MotionSequence decode_motion(const LoadedVq& vq, const TokenSequence& tokens) {
  MotionSequence m = vq.model->detokenize(tokens);
  vq.normalizer.denormalize(m);
  return m;
}

void export_motion(const MotionSequence& motion, const fs::path& stem) {
  Corpus single;
  MotionRecord r;
  r.modality = Modality::kText;
  r.motion = motion;
  single.records.push_back(std::move(r));
  fs::path chr = stem;
  chr += ".chr";
  save_corpus(single, chr);
  fs::path csv = stem;
  csv += ".csv";
  std::ofstream f(csv);
  if (!f) throw DataError("cannot write " + csv.string());
  f << "frame";
  for (std::size_t ch = 0; ch < motion.channels; ++ch) f << ",c" << ch;
  f << "\n";
  char buf[32];
  for (std::size_t t = 0; t < motion.frames; ++t) {
    f << t;
    for (std::size_t ch = 0; ch < motion.channels; ++ch) {
      std::snprintf(buf, sizeof buf, ",%.9g", static_cast<double>(motion.at(t, ch)));
      f << buf;
    }
    f << "\n";
  }
  if (!f) throw DataError("write failed for " + csv.string());
}

EvalRow evaluate_set(const std::string& name, const std::vector<MotionSequence>& generated,
                     const std::vector<MotionSequence>& reference, std::size_t pairs,
                     std::uint64_t seed) {
  std::vector<eval::FeatureVector> gk, gg, rk, rg;
  for (const auto& m : generated) {
    gk.push_back(eval::kinetic_features(m));
    gg.push_back(eval::geometric_features(m));
  }
  for (const auto& m : reference) {
    rk.push_back(eval::kinetic_features(m));
    rg.push_back(eval::geometric_features(m));
  }
  EvalRow row;
  row.set = name;
  row.fid_k = eval::fid(eval::GaussianStats::fit(gk), eval::GaussianStats::fit(rk));
  row.fid_g = eval::fid(eval::GaussianStats::fit(gg), eval::GaussianStats::fit(rg));
  row.div_k = eval::diversity(gk, pairs, seed);
  row.div_g = eval::diversity(gg, pairs, seed);
  row.n_gen = generated.size();
  row.n_ref = reference.size();
  row.seed = seed;
  return row;
}

void write_eval_csv(const fs::path& path, const std::vector<EvalRow>& rows) {
  std::ostringstream s;
  s << "set,fid_k,fid_g,div_k,div_g,n_gen,n_ref,seed\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%.6f,%.6f,%zu,%zu,%llu\n", r.set.c_str(), r.fid_k,
                  r.fid_g, r.div_k, r.div_g, r.n_gen, r.n_ref,
                  static_cast<unsigned long long>(r.seed));
    s << buf;
  }
  const std::string text = s.str();
  write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

DancePair heldout_dance(const RunConfig& c, int genre, std::size_t index) {
  const std::uint64_t seed = Rng::mix(c.seed ^ 0x4e1d0000ULL) + (static_cast<std::uint64_t>(genre) << 24) + index;
  return synth_dance(genre, static_cast<std::size_t>(c.clip_frames), seed, c.genres);
}

PipelineResult run_pipeline(const RunConfig& c, const fs::path& dir, const LogFn& log) {
  c.validate();
  fs::create_directories(dir);
  emit(log, "resolved config:\n" + c.to_text());
  PipelineResult result;
  const fs::path corpus = dir / artifact_name(Stage::kData);
  const fs::path vq_path = dir / artifact_name(Stage::kVq);
  const fs::path gpt_path = dir / artifact_name(Stage::kGpt);
  const fs::path genre_path = dir / artifact_name(Stage::kGenre);
  const fs::path infill_path = dir / artifact_name(Stage::kInfill);

  emit(log, "stage 0: data");
  const Corpus raw = stage_data(c, corpus);
  emit(log, "stage 1: motion VQ-VAE");
  stage_vq(c, corpus, vq_path, log);
  emit(log, "stage 2: cross-modal GPT");
  stage_gpt(c, corpus, vq_path, gpt_path, log);
  emit(log, "stage 3: genre control");
  stage_genre(c, corpus, vq_path, gpt_path, genre_path, log);
  emit(log, "stage 4: keyframe infill");
  stage_infill(c, corpus, vq_path, gpt_path, infill_path, log);
  result.artifacts = {corpus, vq_path, gpt_path, genre_path, infill_path};

  const LoadedVq vq = load_vq(vq_path);
  const LoadedGpt gpt = load_gpt(gpt_path);
  const LoadedGenre genre = load_genre(genre_path);
  const LoadedInfill inf = load_infill(infill_path);
  const fs::path gen_dir = dir / "generated";
  fs::create_directories(gen_dir);

  const std::size_t n_tokens = static_cast<std::size_t>(c.clip_frames / c.vq_down);
  std::vector<MotionSequence> generated, heldout, reference;
  for (const auto& r : raw.records) {
    if (r.modality == Modality::kMusic) reference.push_back(crop_or_repeat(r.motion, n_tokens * c.vq_down));
  }
  for (int i = 0; i < c.eval_samples; ++i) {
    const int g = i % c.genres;
    const DancePair pair = heldout_dance(c, g, static_cast<std::size_t>(i / c.genres));
    GenerateOptions opt;
    opt.max_len = n_tokens;
    opt.seed = Rng::mix(c.seed + static_cast<std::uint64_t>(i));
    const TokenSequence tokens =
        generate_with_text(*gpt.model, pair.music, {genre.model.get(), g}, std::nullopt, opt);
    char name[32];
    std::snprintf(name, sizeof name, "sample_%03d.json", i);
    nlohmann::ordered_json meta{{"genre", g}, {"seed", opt.seed}, {"codes", c.vq_codes}, {"down", c.vq_down}};
    save_tokens(gen_dir / name, tokens, meta.dump());
    result.outputs.push_back(gen_dir / name);
    generated.push_back(decode_motion(vq, tokens));
    heldout.push_back(pair.motion);
  }

  // One text-fused and one infilled sample.
  {
    const DancePair pair = heldout_dance(c, 0, 1000);
    GenerateOptions opt;
    opt.max_len = n_tokens;
    opt.seed = c.seed;
    TextPromptSpec text;
    text.template_id = 0;
    text.schedule = {n_tokens / 4, n_tokens * 3 / 4, c.fusion_ramp, parse_ramp_shape(c.fusion_shape)};
    const TokenSequence fused = generate_with_text(*gpt.model, pair.music, {genre.model.get(), 0}, text, opt);
    save_tokens(gen_dir / "fused.json", fused, nlohmann::ordered_json{{"template", "raise-arms"}}.dump());
    result.outputs.push_back(gen_dir / "fused.json");
    const std::size_t pos = n_tokens / 2;
    MotionSequence clip(static_cast<std::size_t>(c.vq_down), kMotionChannels);
    MotionSequence src = crop_or_repeat(raw.records.front().motion, static_cast<std::size_t>(c.clip_frames));
    vq.normalizer.normalize(src);
    for (std::size_t t = 0; t < clip.frames; ++t)
      for (std::size_t ch = 0; ch < clip.channels; ++ch) clip.at(t, ch) = src.at(pos * c.vq_down + t, ch);
    const TokenSequence filled = infill(*inf.gpt, *inf.model, *vq.model, fused, {{pos, clip}},
                                        static_cast<std::size_t>(c.infill_k), c.infill_refine);
    save_tokens(gen_dir / "infilled.json", filled, nlohmann::ordered_json{{"keyframe", pos}}.dump());
    result.outputs.push_back(gen_dir / "infilled.json");
    const fs::path stem = gen_dir / "infilled";
    export_motion(decode_motion(vq, filled), stem);
    result.outputs.push_back(gen_dir / "infilled.chr");
    result.outputs.push_back(gen_dir / "infilled.csv");
  }

  const auto pairs = static_cast<std::size_t>(c.eval_pairs);
  std::vector<EvalRow> rows;
  rows.push_back(evaluate_set("generated", generated, reference, pairs, c.seed));
  rows.push_back(evaluate_set("ground_truth", heldout, reference, pairs, c.seed));
  const fs::path csv = dir / "eval.csv";
  write_eval_csv(csv, rows);
  result.outputs.push_back(csv);
  emit(log, "eval: generated fid_k " + std::to_string(rows[0].fid_k) + " div_k " +
                std::to_string(rows[0].div_k) + "; ground truth div_k " + std::to_string(rows[1].div_k));
  return result;
}

}  // namespace CHOREO_REAL_NS
}  // namespace choreo

// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

// choreo: data generation, staged training, controllable generation,
// keyframe infill and evaluation.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "choreo/pipeline/pipeline.hpp"
#include "choreo/util/errors.hpp"

using namespace choreo;

namespace {

struct Common {
  std::string config_file;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;
  bool quiet = false;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_file, "key=value config file");
  app->add_option("--preset", c.preset, "desk | paper");
  app->add_option("--seed", c.seed, "master seed");
  app->add_option("--set", c.sets, "override one key, e.g. --set vq.steps=800")->take_all();
  app->add_flag("-q,--quiet", c.quiet, "suppress progress logging");
}

RunConfig resolve(const Common& c) {
  RunConfig cfg;
  if (!c.preset.empty()) cfg.apply_preset(c.preset);
  if (!c.config_file.empty()) cfg.merge_file(c.config_file);
  for (const auto& kv : c.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (c.seed) cfg.seed = *c.seed;
  cfg.validate();
  return cfg;
}

LogFn logger(const Common& c) {
  if (c.quiet) return {};
  return [](const std::string& line) { std::cerr << line << "\n"; };
}

void log_config(const Common& c, const RunConfig& cfg) {
  if (!c.quiet) std::cerr << "resolved config:\n" << cfg.to_text();
}

MusicFeatures read_music(const std::string& spec, std::size_t record, const RunConfig& cfg) {
  if (spec.rfind("synth:", 0) == 0) {
    const std::string rest = spec.substr(6);
    const auto colon = rest.find(':');
    const int genre = std::stoi(rest.substr(0, colon));
    const std::size_t index = colon == std::string::npos ? 0 : std::stoul(rest.substr(colon + 1));
    if (genre < 0 || genre >= cfg.genres) {
      throw ConfigError("synth music genre " + std::to_string(genre) + " outside [0, " +
                        std::to_string(cfg.genres) + ")");
    }
    return heldout_dance(cfg, genre, index).music;
  }
  const Corpus corpus = load_corpus(spec);
  std::size_t seen = 0;
  for (const auto& r : corpus.records) {
    if (r.modality != Modality::kMusic) continue;
    if (seen++ == record) return r.music;
  }
  throw DataError(spec + " has no music-paired record #" + std::to_string(record));
}

std::pair<std::size_t, std::size_t> parse_interval(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ConfigError("--interval expects start:end, got '" + text + "'");
  try {
    return {std::stoul(text.substr(0, colon)), std::stoul(text.substr(colon + 1))};
  } catch (const std::exception&) {
    throw ConfigError("--interval expects token positions start:end, got '" + text + "'");
  }
}

Keyframe parse_keyframe(const std::string& spec, const LoadedVq& vq) {
  std::optional<std::size_t> pos;
  std::string file;
  std::size_t start = 0;
  while (start <= spec.size()) {
    const auto comma = spec.find(',', start);
    const std::string part = spec.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    const auto eq = part.find('=');
    if (eq == std::string::npos) throw ConfigError("--keyframe expects pos=N,file=PATH, got '" + spec + "'");
    const std::string key = part.substr(0, eq), value = part.substr(eq + 1);
    if (key == "pos") {
      pos = std::stoul(value);
    } else if (key == "file") {
      file = value;
    } else {
      throw ConfigError("--keyframe: unknown field '" + key + "'");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (!pos || file.empty()) throw ConfigError("--keyframe needs both pos= and file=");
  const Corpus clip = load_corpus(file);
  if (clip.records.empty()) throw DataError(file + " holds no motion record");
  Keyframe kf;
  kf.position = *pos;
  kf.clip = clip.records.front().motion;
  vq.normalizer.normalize(kf.clip);
  return kf;
}

std::vector<MotionSequence> read_motion_dir(const fs::path& dir, const LoadedVq* vq) {
  if (!fs::is_directory(dir)) throw DataError(dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<MotionSequence> out;
  for (const auto& f : files) {
    if (f.extension() == ".chr") {
      for (const auto& r : load_corpus(f).records) {
        if (r.motion.frames >= 2) out.push_back(r.motion);
      }
    } else if (f.extension() == ".json") {
      if (vq == nullptr) throw ConfigError(dir.string() + " holds token files; pass --vq to decode them");
      out.push_back(decode_motion(*vq, load_tokens(f).tokens));
    }
  }
  if (out.size() < 2) throw DataError(dir.string() + " needs at least two motions");
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"choreo: controllable music-to-dance generation"};
  app.require_subcommand(1);
  Common common;

  auto* data = app.add_subcommand("data", "synthetic corpus tools");
  auto* data_gen = data->add_subcommand("gen", "generate the paired corpus");
  data->require_subcommand(1);
  std::string out;
  data_gen->add_option("--out", out, "corpus file")->required();
  add_common(data_gen, common);

  std::string corpus_path, vq_path, gpt_path, genre_path;
  auto* tvq = app.add_subcommand("train-vqvae", "stage 1: motion VQ-VAE");
  tvq->add_option("--corpus", corpus_path)->required();
  tvq->add_option("--out", out)->required();
  add_common(tvq, common);

  auto* tgpt = app.add_subcommand("train-gpt", "stage 2: cross-modal GPT");
  tgpt->add_option("--corpus", corpus_path)->required();
  tgpt->add_option("--vq", vq_path)->required();
  tgpt->add_option("--out", out)->required();
  add_common(tgpt, common);

  auto* tgenre = app.add_subcommand("train-genre", "stage 3: genre control");
  tgenre->add_option("--corpus", corpus_path)->required();
  tgenre->add_option("--vq", vq_path)->required();
  tgenre->add_option("--gpt", gpt_path)->required();
  tgenre->add_option("--out", out)->required();
  add_common(tgenre, common);

  auto* tinf = app.add_subcommand("train-infill", "stage 4: keyframe infill head");
  tinf->add_option("--corpus", corpus_path)->required();
  tinf->add_option("--vq", vq_path)->required();
  tinf->add_option("--gpt", gpt_path)->required();
  tinf->add_option("--out", out)->required();
  add_common(tinf, common);

  std::string music, text, interval;
  std::size_t record = 0, length = 0;
  int genre = -1, top_k = 0;
  double temperature = 1.0;
  auto* gen = app.add_subcommand("generate", "music-driven generation with optional genre and text");
  gen->add_option("--gpt", gpt_path)->required();
  gen->add_option("--vq", vq_path, "needed with --motion-out");
  gen->add_option("--music", music, "corpus file or synth:GENRE[:INDEX]")->required();
  gen->add_option("--record", record, "music-paired record index in the corpus file");
  gen->add_option("--genre-ckpt", genre_path);
  gen->add_option("--genre", genre, "genre id (requires --genre-ckpt)");
  gen->add_option("--text", text, "template name, e.g. raise-arms");
  gen->add_option("--interval", interval, "token interval start:end for --text");
  gen->add_option("--length", length, "tokens to generate (default: one token per music row)");
  gen->add_option("--top-k", top_k, "sample from the k best tokens (0: greedy)");
  gen->add_option("--temperature", temperature);
  std::string motion_out;
  gen->add_option("--motion-out", motion_out, "also export decoded motion to this stem");
  gen->add_option("--out", out)->required();
  add_common(gen, common);

  std::string tokens_path;
  std::vector<std::string> keyframes;
  std::optional<std::size_t> k;
  std::optional<int> refine;
  auto* inf = app.add_subcommand("infill", "regenerate tokens around keyframes");
  inf->add_option("--gpt", gpt_path, "infill checkpoint")->required();
  inf->add_option("--vq", vq_path)->required();
  inf->add_option("--tokens", tokens_path)->required();
  inf->add_option("--keyframe", keyframes, "pos=N,file=CLIP.chr (repeatable)");
  inf->add_option("--k", k, "window half-width");
  inf->add_option("--refine", refine, "decoding passes");
  inf->add_option("--out", out)->required();
  add_common(inf, common);

  std::string generated, reference;
  auto* ev = app.add_subcommand("eval", "FID and diversity of a generated set");
  ev->add_option("--generated", generated)->required();
  ev->add_option("--reference", reference)->required();
  ev->add_option("--vq", vq_path, "decodes token files");
  ev->add_option("--out", out)->required();
  add_common(ev, common);

  auto* ex = app.add_subcommand("export", "decode tokens to .chr and .csv");
  ex->add_option("--tokens", tokens_path)->required();
  ex->add_option("--vq", vq_path)->required();
  ex->add_option("--out", out, "output stem")->required();
  add_common(ex, common);

  auto* pipe = app.add_subcommand("pipeline", "all stages, samples and evaluation");
  pipe->add_option("--out", out, "artifact directory")->required();
  add_common(pipe, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const RunConfig cfg = resolve(common);
  const LogFn log = logger(common);
  log_config(common, cfg);

  if (data_gen->parsed()) {
    const Corpus c = stage_data(cfg, out);
    emit(log, "wrote " + std::to_string(c.records.size()) + " records to " + out);
  } else if (tvq->parsed()) {
    stage_vq(cfg, corpus_path, out, log);
  } else if (tgpt->parsed()) {
    stage_gpt(cfg, corpus_path, vq_path, out, log);
  } else if (tgenre->parsed()) {
    stage_genre(cfg, corpus_path, vq_path, gpt_path, out, log);
  } else if (tinf->parsed()) {
    stage_infill(cfg, corpus_path, vq_path, gpt_path, out, log);
  } else if (gen->parsed()) {
    const LoadedGpt gpt = load_gpt(gpt_path, "generate");
    std::optional<LoadedGenre> genre_model;
    if (genre >= 0) {
      if (genre_path.empty()) throw ConfigError("--genre requires --genre-ckpt");
      genre_model = load_genre(genre_path, "generate --genre");
      if (genre >= genre_model->config.genres) {
        throw ConfigError("--genre " + std::to_string(genre) + " outside [0, " +
                          std::to_string(genre_model->config.genres) + ")");
      }
    }
    const MusicFeatures m = read_music(music, record, gpt.config);
    GenerateOptions opt;
    opt.seed = cfg.seed;
    opt.max_len = length > 0 ? length
                             : std::min<std::size_t>(m.frames / static_cast<std::size_t>(gpt.config.vq_down),
                                                     static_cast<std::size_t>(gpt.config.gpt_music_len));
    if (top_k > 0) {
      opt.decoding = Decoding::kTopK;
      opt.top_k = top_k;
    }
    opt.temperature = temperature;
    std::optional<TextPromptSpec> prompt;
    nlohmann::ordered_json meta{{"seed", cfg.seed}, {"codes", gpt.config.vq_codes}, {"down", gpt.config.vq_down}};
    if (!text.empty()) {
      if (interval.empty()) throw ConfigError("--text requires --interval start:end");
      TextPromptSpec p;
      try {
        p.template_id = template_id(text);
      } catch (const DataError& e) {
        throw ConfigError(e.what());
      }
      const auto [s, e] = parse_interval(interval);
      p.schedule = {s, e, cfg.fusion_ramp, parse_ramp_shape(cfg.fusion_shape)};
      if (s > e || e > opt.max_len) {
        throw ConfigError("--interval " + interval + " must satisfy start <= end <= " +
                          std::to_string(opt.max_len));
      }
      prompt = p;
      meta["text"] = text;
      meta["interval"] = {s, e};
    }
    if (genre >= 0) meta["genre"] = genre;
    const TokenSequence tokens = generate_with_text(
        *gpt.model, m, {genre_model ? genre_model->model.get() : nullptr, std::max(genre, 0)}, prompt, opt);
    save_tokens(out, tokens, meta.dump());
    if (!motion_out.empty()) {
      if (vq_path.empty()) throw ConfigError("--motion-out requires --vq");
      export_motion(decode_motion(load_vq(vq_path, "generate --motion-out"), tokens), motion_out);
    }
    emit(log, "generated " + std::to_string(tokens.size()) + " tokens -> " + out);
  } else if (inf->parsed()) {
    const LoadedInfill model = load_infill(gpt_path, "infill");
    const LoadedVq vq = load_vq(vq_path, "infill");
    const TokenFile in = load_tokens(tokens_path);
    std::vector<Keyframe> kfs;
    for (const auto& spec : keyframes) kfs.push_back(parse_keyframe(spec, vq));
    std::sort(kfs.begin(), kfs.end(), [](const Keyframe& a, const Keyframe& b) { return a.position < b.position; });
    const std::size_t kk = k ? *k : static_cast<std::size_t>(model.config.infill_k);
    const int passes = refine ? *refine : model.config.infill_refine;
    const TokenSequence result = infill(*model.gpt, *model.model, *vq.model, in.tokens, kfs, kk, passes);
    nlohmann::ordered_json meta{{"source", tokens_path}, {"k", kk}, {"refine", passes}};
    save_tokens(out, result, meta.dump());
    emit(log, "infilled " + std::to_string(kfs.size()) + " keyframe(s) -> " + out);
  } else if (ev->parsed()) {
    std::optional<LoadedVq> vq;
    if (!vq_path.empty()) vq = load_vq(vq_path, "eval");
    const auto gen_set = read_motion_dir(generated, vq ? &*vq : nullptr);
    const auto ref_set = read_motion_dir(reference, vq ? &*vq : nullptr);
    const auto pairs = static_cast<std::size_t>(cfg.eval_pairs);
    std::vector<EvalRow> rows{evaluate_set("generated", gen_set, ref_set, pairs, cfg.seed),
                              evaluate_set("reference", ref_set, ref_set, pairs, cfg.seed)};
    write_eval_csv(out, rows);
    emit(log, "wrote " + out);
  } else if (ex->parsed()) {
    const LoadedVq vq = load_vq(vq_path, "export");
    export_motion(decode_motion(vq, load_tokens(tokens_path).tokens), out);
    emit(log, "wrote " + out + ".chr and " + out + ".csv");
  } else if (pipe->parsed()) {
    const PipelineResult r = run_pipeline(cfg, out, log);
    for (const auto& p : r.artifacts) std::cout << p.string() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const StageError& e) {
    std::cerr << "stage error: " << e.what() << "\n";
    return 3;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

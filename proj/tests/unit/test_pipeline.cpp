// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "choreo/pipeline/pipeline.hpp"
#include "doctest.h"

using namespace choreo;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("choreo_unit_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

RunConfig tiny_run() {
  RunConfig c;
  c.merge_text(
      "seed=3\n"
      "data.per_genre=4\ndata.per_template=2\n"
      "vq.codes=16\nvq.dim=8\nvq.hidden=16\nvq.steps=20\nvq.batch=4\n"
      "gpt.layers=2\ngpt.dim=32\ngpt.heads=2\ngpt.steps=6\ngpt.batch=4\n"
      "genre.steps=2\ngenre.batch=2\ngenre.hidden=16\n"
      "infill.steps=4\ninfill.k=2\n"
      "eval.samples=3\neval.pairs=8\n");
  return c;
}

}  // namespace

TEST_CASE("config text round trip and validation") {
  RunConfig a;
  a.set("gpt.lr", "0.0005");
  a.set("fusion.shape", "cosine");
  RunConfig b;
  b.merge_text(a.to_text());
  CHECK(b.to_text() == a.to_text());
  CHECK(b.get("fusion.shape") == "cosine");

  CHECK_THROWS_AS(a.set("gpt.nope", "1"), ConfigError);
  CHECK_THROWS_AS(a.set("gpt.steps", "many"), ConfigError);
  CHECK_THROWS_AS(a.merge_text("just words"), ConfigError);
  CHECK_THROWS_AS(a.apply_preset("huge"), ConfigError);

  RunConfig paper;
  paper.merge_text("gpt.steps=5\npreset=paper\n");
  CHECK(paper.vq_codes == 1024);
  CHECK(paper.gpt_layers == 18);
  CHECK(paper.gpt_steps == 5);
  paper.validate();

  RunConfig bad;
  bad.gpt_base_layers = bad.gpt_layers;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = RunConfig{};
  bad.vq_down = 3;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("token files round trip") {
  const fs::path dir = scratch("tokens");
  const TokenSequence t{3, 0, 15, 7};
  save_tokens(dir / "t.json", t, R"({"genre":2})");
  const TokenFile f = load_tokens(dir / "t.json");
  CHECK(f.tokens == t);
  CHECK(f.meta.find("\"genre\"") != std::string::npos);
  std::ofstream(dir / "bad.json") << "{\"tokens\": [1, \"x\"]}";
  CHECK_THROWS(load_tokens(dir / "bad.json"));
  CHECK_THROWS(load_tokens(dir / "missing.json"));
}

TEST_CASE("motion export writes chr and csv") {
  const fs::path dir = scratch("export");
  MotionSequence m(12, kMotionChannels);
  for (std::size_t i = 0; i < m.values.size(); ++i) m.values[i] = static_cast<float>(i) * 0.013F - 2.0F;
  export_motion(m, dir / "clip");
  const Corpus back = load_corpus(dir / "clip.chr");
  REQUIRE(back.records.size() == 1);
  CHECK(back.records[0].motion.values == m.values);

  std::ifstream csv(dir / "clip.csv");
  std::string line;
  int lines = 0;
  while (std::getline(csv, line)) {
    ++lines;
    int cols = 1;
    for (char ch : line) cols += ch == ',';
    CHECK(cols == 67);
    if (lines == 1) CHECK(line.rfind("frame,c0,", 0) == 0);
  }
  CHECK(lines == 13);
}

TEST_CASE("stages refuse missing or mismatched predecessors") {
  const fs::path dir = scratch("stages");
  const RunConfig c = tiny_run();
  try {
    stage_genre(c, dir / "corpus.chr", dir / "vq.ckpt", dir / "gpt.ckpt", dir / "genre.ckpt");
    FAIL("expected StageError");
  } catch (const StageError& e) {
    CHECK(std::string(e.what()).find("requires stage 2 checkpoint (gpt.ckpt)") != std::string::npos);
  }
  try {
    stage_gpt(c, dir / "corpus.chr", dir / "vq.ckpt", dir / "gpt.ckpt");
    FAIL("expected StageError");
  } catch (const StageError& e) {
    CHECK(std::string(e.what()).find("requires stage 0") != std::string::npos);
  }
  stage_data(c, dir / "corpus.chr");
  try {
    stage_gpt(c, dir / "corpus.chr", dir / "vq.ckpt", dir / "gpt.ckpt");
    FAIL("expected StageError");
  } catch (const StageError& e) {
    CHECK(std::string(e.what()).find("requires stage 1 checkpoint (vq.ckpt)") != std::string::npos);
  }
  stage_vq(c, dir / "corpus.chr", dir / "vq.ckpt");
  try {
    stage_infill(c, dir / "corpus.chr", dir / "vq.ckpt", dir / "gpt.ckpt", dir / "infill.ckpt");
    FAIL("expected StageError");
  } catch (const StageError& e) {
    CHECK(std::string(e.what()).find("requires stage 2 checkpoint") != std::string::npos);
  }
  // A VQ checkpoint in the GPT slot is the wrong stage.
  CHECK_THROWS_AS(load_gpt(dir / "vq.ckpt"), StageError);

  RunConfig other = c;
  other.vq_codes = 32;
  CHECK_THROWS_AS(stage_gpt(other, dir / "corpus.chr", dir / "vq.ckpt", dir / "gpt.ckpt"), ConfigError);
}

TEST_CASE("tiny pipeline is complete and reproducible") {
  const RunConfig c = tiny_run();
  const fs::path a = scratch("pipe_a"), b = scratch("pipe_b");
  const PipelineResult ra = run_pipeline(c, a);
  const PipelineResult rb = run_pipeline(c, b);
  REQUIRE(ra.artifacts.size() == 5);
  REQUIRE(ra.outputs.size() == rb.outputs.size());
  for (const auto& p : ra.artifacts) {
    CHECK(fs::exists(p));
    CHECK(slurp(p) == slurp(b / p.filename()));
  }
  for (const auto& p : ra.outputs) {
    CHECK(slurp(p) == slurp(b / fs::relative(p, a)));
  }
  const std::string eval = slurp(a / "eval.csv");
  CHECK(eval.rfind("set,fid_k,fid_g,div_k,div_g,n_gen,n_ref,seed\n", 0) == 0);
  CHECK(eval.find("\ngenerated,") != std::string::npos);
  CHECK(eval.find("\nground_truth,") != std::string::npos);

  const LoadedInfill inf = load_infill(a / "infill.ckpt");
  CHECK(inf.gpt->config().codes == 16);
}

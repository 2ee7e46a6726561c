// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#include "choreo/config/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <variant>

namespace choreo {

namespace {

using Field = std::variant<int RunConfig::*, double RunConfig::*, bool RunConfig::*,
                           std::uint64_t RunConfig::*, std::string RunConfig::*>;

struct Entry {
  const char* key;
  Field field;
};

const std::vector<Entry>& table() {
  static const std::vector<Entry> kTable{
      {"preset", &RunConfig::preset},
      {"seed", &RunConfig::seed},
      {"data.genres", &RunConfig::genres},
      {"data.per_genre", &RunConfig::per_genre},
      {"data.templates", &RunConfig::templates},
      {"data.per_template", &RunConfig::per_template},
      {"data.clip_frames", &RunConfig::clip_frames},
      {"vq.codes", &RunConfig::vq_codes},
      {"vq.dim", &RunConfig::vq_dim},
      {"vq.hidden", &RunConfig::vq_hidden},
      {"vq.down", &RunConfig::vq_down},
      {"vq.beta", &RunConfig::vq_beta},
      {"vq.lr", &RunConfig::vq_lr},
      {"vq.beta1", &RunConfig::vq_beta1},
      {"vq.beta2", &RunConfig::vq_beta2},
      {"vq.steps", &RunConfig::vq_steps},
      {"vq.batch", &RunConfig::vq_batch},
      {"vq.init_from_data", &RunConfig::vq_init_from_data},
      {"gpt.layers", &RunConfig::gpt_layers},
      {"gpt.base_layers", &RunConfig::gpt_base_layers},
      {"gpt.dim", &RunConfig::gpt_dim},
      {"gpt.heads", &RunConfig::gpt_heads},
      {"gpt.music_len", &RunConfig::gpt_music_len},
      {"gpt.text_len", &RunConfig::gpt_text_len},
      {"gpt.lr", &RunConfig::gpt_lr},
      {"gpt.beta1", &RunConfig::gpt_beta1},
      {"gpt.beta2", &RunConfig::gpt_beta2},
      {"gpt.steps", &RunConfig::gpt_steps},
      {"gpt.batch", &RunConfig::gpt_batch},
      {"gpt.corrupt", &RunConfig::gpt_corrupt},
      {"genre.rows", &RunConfig::genre_rows},
      {"genre.z", &RunConfig::genre_z},
      {"genre.hidden", &RunConfig::genre_hidden},
      {"genre.lambda", &RunConfig::genre_lambda},
      {"genre.pure_gan", &RunConfig::genre_pure_gan},
      {"genre.mismatch_negatives", &RunConfig::genre_mismatch_negatives},
      {"genre.lr", &RunConfig::genre_lr},
      {"genre.steps", &RunConfig::genre_steps},
      {"genre.batch", &RunConfig::genre_batch},
      {"fusion.ramp", &RunConfig::fusion_ramp},
      {"fusion.shape", &RunConfig::fusion_shape},
      {"infill.k", &RunConfig::infill_k},
      {"infill.mask_rate", &RunConfig::infill_mask_rate},
      {"infill.steps", &RunConfig::infill_steps},
      {"infill.lr", &RunConfig::infill_lr},
      {"infill.refine", &RunConfig::infill_refine},
      {"infill.post_softmax", &RunConfig::infill_post_softmax},
      {"eval.samples", &RunConfig::eval_samples},
      {"eval.pairs", &RunConfig::eval_pairs},
  };
  return kTable;
}

const Entry& find(const std::string& key) {
  for (const auto& e : table()) {
    if (key == e.key) return e;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
  }
  return value;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> kKeys = [] {
    std::vector<std::string> k;
    for (const auto& e : table()) k.emplace_back(e.key);
    return k;
  }();
  return kKeys;
}

void RunConfig::set(const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  const Entry& e = find(key);
  std::visit(
      [&](auto member) {
        using T = std::remove_reference_t<decltype(this->*member)>;
        if constexpr (std::is_same_v<T, std::string>) {
          this->*member = value;
        } else if constexpr (std::is_same_v<T, bool>) {
          if (value == "true" || value == "1") {
            this->*member = true;
          } else if (value == "false" || value == "0") {
            this->*member = false;
          } else {
            throw ConfigError("config key '" + key + "': expected true/false, got '" + value + "'");
          }
        } else {
          this->*member = parse_number<T>(key, value);
        }
      },
      e.field);
  if (key == "preset") apply_preset(value);
}

std::string RunConfig::get(const std::string& key) const {
  const Entry& e = find(key);
  return std::visit(
      [&](auto member) -> std::string {
        using T = std::remove_cvref_t<decltype(this->*member)>;
        if constexpr (std::is_same_v<T, std::string>) {
          return this->*member;
        } else if constexpr (std::is_same_v<T, bool>) {
          return this->*member ? "true" : "false";
        } else if constexpr (std::is_same_v<T, double>) {
          return format_double(this->*member);
        } else {
          return std::to_string(this->*member);
        }
      },
      e.field);
}

void RunConfig::apply_preset(const std::string& name) {
  if (name == "desk") {
    RunConfig fresh;
    fresh.seed = seed;
    *this = fresh;
  } else if (name == "paper") {
    RunConfig fresh;
    fresh.seed = seed;
    *this = fresh;
    preset = "paper";
    genres = 22;
    vq_codes = 1024;
    vq_dim = 512;
    vq_hidden = 512;
    gpt_layers = 18;
    gpt_base_layers = 3;
    gpt_dim = 1024;
    gpt_heads = 16;
    gpt_music_len = 480;
    gpt_text_len = 480;
  } else {
    throw ConfigError("unknown preset '" + name + "' (expected desk or paper)");
  }
}

void RunConfig::merge_text(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    }
    pairs.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  for (const auto& [k, v] : pairs) {
    if (k == "preset") set(k, v);
  }
  for (const auto& [k, v] : pairs) {
    if (k != "preset") set(k, v);
  }
}

void RunConfig::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  merge_text(ss.str());
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& k : keys()) out += k + "=" + get(k) + "\n";
  return out;
}

void RunConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("invalid config: " + what);
  };
  require(genres >= 1, "data.genres must be >= 1");
  require(templates >= 1 && templates <= 8, "data.templates must be in 1..8");
  require(per_genre >= 1 && per_template >= 1, "corpus counts must be >= 1");
  require(vq_down >= 1 && (vq_down & (vq_down - 1)) == 0, "vq.down must be a power of two");
  require(clip_frames % vq_down == 0, "vq.down must divide data.clip_frames");
  require(vq_beta > 0, "vq.beta must be > 0");
  require(vq_codes >= 1 && vq_dim >= 1, "codebook must be non-empty");
  require(gpt_heads >= 1 && gpt_dim % gpt_heads == 0, "gpt.dim must be divisible by gpt.heads");
  require(gpt_base_layers >= 1 && gpt_base_layers < gpt_layers,
          "gpt.base_layers must be in 1..gpt.layers-1");
  require(clip_frames / vq_down + 1 <= gpt_music_len, "gpt.music_len too short for one clip");
  require(clip_frames / vq_down + 1 <= gpt_text_len, "gpt.text_len too short for one clip");
  require(gpt_corrupt >= 0 && gpt_corrupt <= 1, "gpt.corrupt must be in [0,1]");
  require(infill_k >= 0, "infill.k must be >= 0");
  require(infill_mask_rate > 0 && infill_mask_rate < 1, "infill.mask_rate must be in (0,1)");
  require(infill_refine >= 1, "infill.refine must be >= 1");
  require(fusion_ramp >= 0 && fusion_ramp <= 0.5, "fusion.ramp must be in [0,0.5]");
  require(fusion_shape == "linear" || fusion_shape == "cosine", "fusion.shape must be linear|cosine");
  require(genre_rows >= 1 && genre_z >= 1, "genre.rows and genre.z must be >= 1");
}

}  // namespace choreo

// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "choreo/eval/metrics.hpp"
#include "choreo/fusion/fusion.hpp"
#include "choreo/infill/infill.hpp"
#include "choreo/pipeline/pipeline.hpp"
#include "fid_oracle.hpp"

using namespace choreo;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void note(const char* fmt, auto... args) {
  std::printf("    ");
  std::printf(fmt, args...);
  std::printf("\n");
  std::fflush(stdout);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string quoted(const fs::path& p) { return "'" + p.string() + "'"; }

struct Options {
  fs::path work;
  fs::path cli;
  fs::path gradient_suite;
  std::set<std::string> only;
};

// --- independent oracles ----------------------------------------------------

/// Spectral power of the detrended pelvis sway at each genre fundamental,
/// by direct DFT; the strongest bin names the genre.
int fft_oracle_genre(const MotionSequence& m, int n_genres) {
  const std::size_t n = m.frames;
  double mean = 0.0;
  for (std::size_t f = 0; f < n; ++f) mean += m.at(f, 0);
  mean /= static_cast<double>(n);
  int best = 0;
  double best_power = -1.0;
  for (int g = 0; g < n_genres; ++g) {
    const double hz = (2.0 + g) / 4.0;
    std::complex<double> acc = 0.0;
    for (std::size_t f = 0; f < n; ++f) {
      const double phase = -2.0 * std::numbers::pi * hz * static_cast<double>(f) / m.fps;
      acc += (m.at(f, 0) - mean) * std::polar(1.0, phase);
    }
    if (std::norm(acc) > best_power) {
      best_power = std::norm(acc);
      best = g;
    }
  }
  return best;
}

int brute_force_nearest(const std::vector<double>& z, const std::vector<double>& book, std::size_t dim) {
  int best = 0;
  double best_d = INFINITY;
  for (std::size_t k = 0; k * dim < book.size(); ++k) {
    double d = 0.0;
    for (std::size_t j = 0; j < dim; ++j) d += (z[j] - book[k * dim + j]) * (z[j] - book[k * dim + j]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(k);
    }
  }
  return best;
}

bool same_bits(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() &&
         std::memcmp(a.data().data(), b.data().data(), a.numel() * sizeof(Real)) == 0;
}

// --- shared fixtures --------------------------------------------------------

RunConfig desk_config() {
  RunConfig c;
  c.apply_preset("desk");
  c.seed = 7;
  return c;
}

class Fixtures {
 public:
  explicit Fixtures(const Options& o) : opt_(o) {}

  const RunConfig& config() const { return config_; }

  /// Two CLI pipeline runs; returns their directories and wall times.
  const std::vector<fs::path>& pipeline_runs() {
    if (runs_.empty()) {
      for (const char* name : {"run_a", "run_b"}) {
        const fs::path dir = opt_.work / name;
        fs::remove_all(dir);
        const auto t0 = Clock::now();
        const std::string cmd = quoted(opt_.cli) + " pipeline --preset desk --seed 7 -q --out " + quoted(dir) +
                                " > " + quoted(opt_.work / (std::string(name) + ".log")) + " 2>&1";
        const int rc = std::system(cmd.c_str());
        note("pipeline %s: exit %d, %.1f s", name, rc, seconds_since(t0));
        if (rc != 0) throw std::runtime_error("pipeline run failed: " + cmd);
        runs_.push_back(dir);
      }
    }
    return runs_;
  }

  /// A standalone desk VQ-VAE stage, timed.
  const LoadedVq& vq() {
    if (!vq_) {
      const fs::path dir = opt_.work / "vq_stage";
      fs::remove_all(dir);
      fs::create_directories(dir);
      stage_data(config_, dir / "corpus.chr");
      const auto t0 = Clock::now();
      vq_report_ = stage_vq(config_, dir / "corpus.chr", dir / "vq.ckpt");
      vq_seconds_ = seconds_since(t0);
      vq_ = load_vq(dir / "vq.ckpt");
      corpus_ = load_corpus(dir / "corpus.chr");
    }
    return *vq_;
  }
  double vq_seconds() const { return vq_seconds_; }
  const Corpus& corpus() {
    vq();
    return corpus_;
  }

  struct Memorized {
    std::vector<TextExample> text;
    std::vector<MusicExample> music;
    std::unique_ptr<CrossModalGpt> gpt;
    std::unique_ptr<InfillModel> infill;
    GptTrainReport train;
    double infill_nll = 0.0;
  };

  /// GPT and infill head trained to memorise 8 music and 8 text sequences.
  Memorized& memorized() {
    if (!mem_) {
      const LoadedVq& q = vq();
      mem_.emplace();
      for (int t = 0; t < kTemplateCount; ++t) {
        MotionSequence m = crop_or_repeat(synth_text_motion({t, 48}, 100 + static_cast<std::uint64_t>(t)));
        q.normalizer.normalize(m);
        mem_->text.push_back({t, q.model->tokenize(m)});
      }
      for (int i = 0; i < 8; ++i) {
        DancePair d = synth_dance(i % 3, kClipFrames, 200 + static_cast<std::uint64_t>(i));
        q.normalizer.normalize(d.motion);
        mem_->music.push_back({d.music, q.model->tokenize(d.motion)});
      }
      mem_->gpt = std::make_unique<CrossModalGpt>(gpt_config(config_), 5);
      GptTrainConfig tc;
      tc.steps = 400;
      tc.seed = 9;
      auto t0 = Clock::now();
      alternate_train(*mem_->gpt, mem_->text, mem_->music, tc);
      mem_->train = evaluate_gpt(*mem_->gpt, mem_->text, mem_->music);
      note("memorisation GPT: %.1f s", seconds_since(t0));

      std::vector<TokenSequence> all;
      for (const auto& e : mem_->music) all.push_back(e.tokens);
      for (const auto& e : mem_->text) all.push_back(e.tokens);
      mem_->infill = std::make_unique<InfillModel>(*mem_->gpt, 11);
      InfillTrainConfig ic;
      ic.seed = 13;
      t0 = Clock::now();
      mem_->infill_nll = train_infill(*mem_->gpt, *mem_->infill, all, ic).final_nll;
      note("memorisation infill head: %.1f s, final masked NLL %.4f", seconds_since(t0), mem_->infill_nll);
    }
    return *mem_;
  }

 private:
  Options opt_;
  RunConfig config_ = desk_config();
  std::vector<fs::path> runs_;
  std::optional<LoadedVq> vq_;
  VqTrainReport vq_report_;
  double vq_seconds_ = 0.0;
  Corpus corpus_;
  std::optional<Memorized> mem_;
};

// --- criteria ---------------------------------------------------------------

struct Verdict {
  bool pass = false;
  std::string summary;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Verdict a1_gradients(const Options& o) {
  const auto t0 = Clock::now();
  const std::string cmd = quoted(o.gradient_suite) + " --minimal > " + quoted(o.work / "a1_gradients.log") + " 2>&1";
  const int rc = std::system(cmd.c_str());
  const double secs = seconds_since(t0);
  note("gradient suite log: %s", (o.work / "a1_gradients.log").c_str());
  return {rc == 0 && secs < 120.0, fmt("finite-difference suite (primitives and composite blocks, tol 1e-4) exit %d in %.1f s", rc, secs)};
}

Verdict a2_vq(Fixtures& fx) {
  const LoadedVq& q = fx.vq();
  const RunConfig& c = fx.config();
  const Corpus norm = normalize_corpus(fx.corpus(), q.normalizer, static_cast<std::size_t>(c.clip_frames));
  const VqTrainReport r = evaluate_vqvae(*q.model, norm);
  std::set<int> used;
  for (const auto& rec : norm.records)
    for (int t : q.model->tokenize(rec.motion)) used.insert(t);
  const double usage = static_cast<double>(used.size()) / c.vq_codes;

  const std::size_t dim = static_cast<std::size_t>(c.vq_dim);
  const auto book_span = q.model->codebook().data();
  const std::vector<double> book(book_span.begin(), book_span.end());
  Rng rng(2024);
  std::vector<Real> flat;
  std::vector<std::vector<double>> latents;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> z(dim);
    for (auto& v : z) {
      v = static_cast<Real>(rng.normal() * 1.5);
      flat.push_back(static_cast<Real>(v));
    }
    latents.push_back(std::move(z));
  }
  const Quantized qz = q.model->quantize(Tensor::from_data({1000, dim}, flat));
  int agree = 0;
  for (std::size_t i = 0; i < 1000; ++i) agree += qz.tokens[i] == brute_force_nearest(latents[i], book, dim);

  const std::size_t n_music = norm.count(Modality::kMusic), n_text = norm.count(Modality::kText);
  note("corpus %zu music + %zu text sequences of %d frames; %d steps in %.1f s", n_music, n_text, c.clip_frames,
       c.vq_steps, fx.vq_seconds());
  const bool pass = n_music == 96 && n_text == 160 && c.vq_steps <= 5000 && r.recon_l1 < 0.1 && usage >= 0.2 &&
                    agree == 1000 && fx.vq_seconds() < 600.0;
  return {pass, fmt("recon L1 %.4f (<0.1), codebook usage %.3f (>=0.2), quantizer vs brute force %d/1000", r.recon_l1,
                    usage, agree)};
}

Verdict a3_memorization(Fixtures& fx) {
  auto& m = fx.memorized();
  const CrossModalGpt& gpt = *m.gpt;
  NoGradGuard ng;
  int music_exact = 0, text_exact = 0;
  for (const auto& e : m.music) {
    const Tensor emb = gpt.embed_music(stack_music({&e.music}));
    music_exact += generate(gpt, emb, {32, 0}) == e.tokens;
  }
  for (const auto& e : m.text) text_exact += generate_text(gpt, e.template_id, {32, 0}) == e.tokens;

  Rng rng(77);
  int causal_ok = 0;
  const int codes = gpt.config().codes;
  for (int trial = 0; trial < 20; ++trial) {
    const bool text = trial % 2 == 0;
    const std::size_t idx = static_cast<std::size_t>(trial / 2) % 8;
    TokenSequence a = text ? m.text[idx].tokens : m.music[idx].tokens;
    const std::size_t p = rng.below(a.size());
    TokenSequence b = a;
    b[p] = (b[p] + 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(codes - 1)))) % codes;
    auto logits = [&](const TokenSequence& t) {
      if (text) return gpt.head(gpt.t_base({m.text[idx].template_id}, {t}));
      const Tensor emb = gpt.embed_music(stack_music({&m.music[idx].music}));
      return gpt.head(gpt.m_base(emb, {t}));
    };
    const Tensor la = logits(a), lb = logits(b);
    const std::size_t v = static_cast<std::size_t>(gpt.config().vocab());
    const bool prefix_same = std::memcmp(la.data().data(), lb.data().data(), (p + 1) * v * sizeof(Real)) == 0;
    bool later_moved = false;
    for (std::size_t i = (p + 1) * v; i < la.numel(); ++i) later_moved = later_moved || la.at(i) != lb.at(i);
    causal_ok += prefix_same && later_moved;
  }
  const bool pass = m.train.text_nll < 0.05 && m.train.music_nll < 0.05 && music_exact == 8 && text_exact == 8 &&
                    causal_ok == 20;
  return {pass, fmt("NLL text %.4f music %.4f (<0.05), greedy exact music %d/8 text %d/8, causality %d/20",
                    m.train.text_nll, m.train.music_nll, music_exact, text_exact, causal_ok)};
}

Verdict a4_genre(Fixtures& fx) {
  const fs::path dir = fx.pipeline_runs().front();
  const RunConfig& c = fx.config();
  const LoadedVq vq = load_vq(dir / "vq.ckpt");
  const LoadedGpt gpt = load_gpt(dir / "gpt.ckpt");
  const LoadedGenre genre = load_genre(dir / "genre.ckpt");

  const std::vector<double> half(16, 0.5), c8(16, 0.8), c3(16, 0.3);
  const double e_half = genre_objective(half, half);
  const double e_mixed = genre_objective(c8, c3);
  const double closed_err = std::max(std::abs(e_half - 2.0 * std::log(0.5)),
                                     std::abs(e_mixed - (std::log(0.8) + std::log(0.7))));

  int hits[3] = {0, 0, 0};
  const char* modes[3] = {"genre code, matched music", "no genre code, matched music",
                          "genre code, music of another genre"};
  for (int mode = 0; mode < 3; ++mode) {
    for (int i = 0; i < 60; ++i) {
      const int g = i % c.genres;
      const int music_genre = mode == 2 ? (g + 1) % c.genres : g;
      const DancePair pair = heldout_dance(c, music_genre, 2000 + static_cast<std::size_t>(i / c.genres));
      GenerateOptions opt;
      opt.max_len = static_cast<std::size_t>(c.clip_frames / c.vq_down);
      opt.decoding = Decoding::kTopK;
      opt.seed = Rng::mix(0xa4 + static_cast<std::uint64_t>(i));
      const GenreRequest req{mode == 1 ? nullptr : genre.model.get(), g};
      const TokenSequence t = generate_with_text(*gpt.model, pair.music, req, std::nullopt, opt);
      hits[mode] += fft_oracle_genre(decode_motion(vq, t), c.genres) == g;
    }
    note("%s: %d/60 classified as the requested genre", modes[mode], hits[mode]);
  }
  const bool pass = hits[0] >= 48 && closed_err < 1e-9;
  return {pass, fmt("FFT oracle agrees on %d/60 genre-conditioned dances (>=48); constant-D objective error %.2e",
                    hits[0], closed_err)};
}

Verdict a5_fusion(Fixtures& fx) {
  auto& m = fx.memorized();
  const CrossModalGpt& gpt = *m.gpt;
  NoGradGuard ng;
  int empty_same = 0, empty_total = 0;
  for (std::size_t i = 0; i < m.music.size(); ++i) {
    const Tensor emb = gpt.embed_music(stack_music({&m.music[i].music}));
    for (Decoding dec : {Decoding::kGreedy, Decoding::kTopK}) {
      GenerateOptions opt;
      opt.max_len = 32;
      opt.seed = 40 + i;
      opt.decoding = dec;
      const TokenSequence plain = generate(gpt, emb, opt);
      const std::size_t s = 4 * i;
      empty_same += generate_with_text(gpt, m.music[i].music, {}, TextPromptSpec{0, {s, s}}, opt) == plain;
      ++empty_total;
    }
  }

  int endpoint_ok = 0;
  for (std::size_t i = 0; i < 8; ++i) {
    const Tensor emb = gpt.embed_music(stack_music({&m.music[i].music}));
    const Tensor mf = gpt.m_base(emb, {m.music[i].tokens});
    const Tensor tf = gpt.t_base({m.text[i].template_id}, {m.music[i].tokens});
    endpoint_ok += same_bits(fuse(tf, mf, 0.0), tf) && same_bits(fuse(tf, mf, 1.0), mf);
  }

  const RunConfig& c = fx.config();
  const FusionSchedule base{8, 32, c.fusion_ramp, parse_ramp_shape(c.fusion_shape)};
  int hit = 0, total = 0;
  for (std::size_t i = 0; i < m.music.size(); ++i) {
    const auto& target = m.text[(i + 3) % m.text.size()];
    GenerateOptions opt;
    opt.max_len = 32;
    const TokenSequence out = generate_with_text(gpt, m.music[i].music, {}, TextPromptSpec{target.template_id, base}, opt);
    for (std::size_t p = base.start; p < std::min(out.size(), base.end); ++p) {
      if (fusion_weight(p, base) != 0.0) continue;
      hit += out[p] == target.tokens[p - base.start];
      ++total;
    }
  }
  const double acc = total ? static_cast<double>(hit) / total : 0.0;
  const bool pass = empty_same == empty_total && endpoint_ok == 8 && acc >= 0.9;
  return {pass, fmt("empty interval identical %d/%d, endpoint identities %d/8, mid-interval accuracy %.3f (>=0.9, %d positions)",
                    empty_same, empty_total, endpoint_ok, acc, total)};
}

Verdict a6_infill(Fixtures& fx) {
  auto& m = fx.memorized();
  const CrossModalGpt& gpt = *m.gpt;
  const InfillModel& model = *m.infill;
  const std::size_t k = static_cast<std::size_t>(fx.config().infill_k);
  std::vector<TokenSequence> all;
  for (const auto& e : m.music) all.push_back(e.tokens);
  for (const auto& e : m.text) all.push_back(e.tokens);
  const int codes = gpt.config().codes;
  NoGradGuard ng;

  Rng rng(606);
  int keep_kf = 0, keep_out = 0;
  for (int trial = 0; trial < 50; ++trial) {
    TokenSequence t = all[rng.below(all.size())];
    if (trial % 2) {
      for (auto& x : t) x = static_cast<int>(rng.below(static_cast<std::uint64_t>(codes)));
    }
    std::vector<std::pair<std::size_t, int>> kf;
    std::vector<std::size_t> pos;
    for (std::size_t p = rng.below(6); p < t.size(); p += 4 + rng.below(12)) {
      kf.emplace_back(p, static_cast<int>(rng.below(static_cast<std::uint64_t>(codes))));
      pos.push_back(p);
    }
    const TokenSequence out = infill_tokens(gpt, model, t, kf, k, fx.config().infill_refine);
    const InfillMask mask = build_infill_mask(pos, k, t.size());
    bool kf_ok = true, out_ok = true;
    for (const auto& [p, tok] : kf) kf_ok = kf_ok && out[p] == tok;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const bool is_kf = std::find(pos.begin(), pos.end(), i) != pos.end();
      if (!is_kf && !mask.predict[i]) out_ok = out_ok && out[i] == t[i];
    }
    keep_kf += kf_ok;
    keep_out += out_ok;
  }

  int hit = 0, total = 0;
  for (const auto& seq : all) {
    for (std::size_t p : {8U, 16U, 24U}) {
      TokenSequence ctx = seq;
      const InfillMask mask = build_infill_mask({p}, k, seq.size());
      for (std::size_t i = 0; i < ctx.size(); ++i)
        if (mask.predict[i]) ctx[i] = static_cast<int>(rng.below(static_cast<std::uint64_t>(codes)));
      const TokenSequence out = infill_tokens(gpt, model, ctx, {{p, seq[p]}}, k, fx.config().infill_refine);
      for (std::size_t i = 0; i < seq.size(); ++i) {
        if (!mask.predict[i]) continue;
        hit += out[i] == seq[i];
        ++total;
      }
    }
  }
  const double planted = static_cast<double>(hit) / total;
  const double masked = masked_recovery(gpt, model, all, fx.config().infill_mask_rate, 31);
  note("random-mask recovery at rate %.2f: %.3f", fx.config().infill_mask_rate, masked);

  int sensitive = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const TokenSequence& a = all[static_cast<std::size_t>(trial) % all.size()];
    std::vector<bool> mk(a.size(), false);
    const std::size_t p = 4 + rng.below(12);
    for (std::size_t i = p - k / 2; i <= p + k / 2; ++i) mk[i] = i != p;
    const std::size_t later = p + k / 2 + 1 + rng.below(a.size() - (p + k / 2 + 1));
    TokenSequence b = a;
    b[later] = (b[later] + 1) % codes;
    const Tensor la = model.logits(gpt, {a}, {mk}), lb = model.logits(gpt, {b}, {mk});
    const std::size_t v = static_cast<std::size_t>(gpt.config().vocab());
    bool moved = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!mk[i]) continue;
      for (std::size_t j = 0; j < v; ++j) moved = moved || la.at((i + 1) * v + j) != lb.at((i + 1) * v + j);
    }
    sensitive += moved;
  }
  const bool pass = keep_kf == 50 && keep_out == 50 && planted >= 0.95 && masked > 0.95 && sensitive == 20;
  return {pass, fmt("keyframes kept %d/50, outside window kept %d/50, planted recovery %.3f (>=0.95), "
                    "context sensitivity %d/20",
                    keep_kf, keep_out, planted, sensitive)};
}

Verdict a7_metrics(Fixtures& fx) {
  using namespace eval;
  std::vector<FeatureVector> kin;
  for (const auto& r : fx.corpus().records) {
    if (r.modality == Modality::kMusic) kin.push_back(kinetic_features(r.motion));
  }
  const GaussianStats s = GaussianStats::fit(kin);
  const double self = fid(s, s);
  const double one_d = fid(GaussianStats{{0.0}, {1.0}, 2}, GaussianStats{{1.0}, {1.0}, 2});
  std::vector<FeatureVector> same(10, kin.front());
  const double div_same = diversity(same, 40, 1);

  Rng rng(707);
  double worst = 0.0;
  for (std::size_t dim : {kKineticDim, kGeometricDim}) {
    for (int trial = 0; trial < 3; ++trial) {
      auto spd = [&] {
        std::vector<double> a(dim * dim), out(dim * dim, 0.0);
        for (auto& x : a) x = rng.normal() / std::sqrt(static_cast<double>(dim));
        for (std::size_t i = 0; i < dim; ++i)
          for (std::size_t j = 0; j < dim; ++j) {
            for (std::size_t k = 0; k < dim; ++k) out[i * dim + j] += a[i * dim + k] * a[j * dim + k];
            if (i == j) out[i * dim + j] += 0.1;
          }
        return out;
      };
      GaussianStats x{std::vector<double>(dim), spd(), 50}, y{std::vector<double>(dim), spd(), 50};
      for (auto& v : x.mean) v = rng.normal();
      for (auto& v : y.mean) v = rng.normal();
      worst = std::max(worst, std::abs(fid(x, y) - static_cast<double>(testing::oracle_fid(x, y))));
    }
  }

  const std::string csv = slurp(fx.pipeline_runs().front() / "eval.csv");
  std::istringstream in(csv);
  std::string header, line;
  std::getline(in, header);
  std::map<std::string, std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
    if (!cells.empty()) rows[cells.front()] = cells;
  }
  const bool csv_ok = header == "set,fid_k,fid_g,div_k,div_g,n_gen,n_ref,seed" && rows.count("generated") &&
                      rows.count("ground_truth");
  if (csv_ok) {
    const auto& g = rows["generated"];
    const auto& t = rows["ground_truth"];
    note("eval.csv diversity: generated div_k %s div_g %s; ground truth div_k %s div_g %s", g[3].c_str(),
         g[4].c_str(), t[3].c_str(), t[4].c_str());
    note("ordering: generated div_k %s ground truth div_k",
         std::stod(g[3]) < std::stod(t[3]) ? "<" : ">=");
  }
  const bool pass = self < 1e-6 && std::abs(one_d - 1.0) <= 1e-9 && div_same == 0.0 && worst <= 1e-5 && csv_ok;
  return {pass, fmt("FID(X,X) %.2e, 1-D closed form %.12f, identical-set diversity %.1f, sqrt vs long-double oracle "
                    "%.2e, eval CSV %s",
                    self, one_d, div_same, worst, csv_ok ? "complete" : "missing rows")};
}

Verdict a8_determinism(Fixtures& fx) {
  const auto& runs = fx.pipeline_runs();
  std::size_t files = 0, identical = 0;
  std::vector<std::string> differing;
  for (const auto& entry : fs::recursive_directory_iterator(runs[0])) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), runs[0]);
    ++files;
    if (slurp(entry.path()) == slurp(runs[1] / rel)) {
      ++identical;
    } else {
      differing.push_back(rel.string());
    }
  }
  std::size_t other = 0;
  for (const auto& entry : fs::recursive_directory_iterator(runs[1])) other += entry.is_regular_file();
  for (const auto& d : differing) note("differs: %s", d.c_str());
  bool ckpts = true;
  for (const char* name : {"vq.ckpt", "gpt.ckpt", "genre.ckpt", "infill.ckpt", "corpus.chr"})
    ckpts = ckpts && fs::exists(runs[0] / name);
  return {ckpts && files == other && identical == files && files > 5,
          fmt("two `pipeline --preset desk --seed 7` runs: %zu/%zu files byte-identical", identical, files)};
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  std::vector<std::string> only;
  CLI::App app{"choreo acceptance run"};
  app.add_option("--work", o.work, "scratch directory")->required();
  app.add_option("--cli", o.cli, "choreo executable")->required();
  app.add_option("--gradient-suite", o.gradient_suite, "gradient test executable")->required();
  app.add_option("--only", only, "subset of criteria, e.g. A3 A5");
  CLI11_PARSE(app, argc, argv);
  o.only.insert(only.begin(), only.end());
  fs::create_directories(o.work);

  Fixtures fx(o);
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"A1", [&] { return a1_gradients(o); }},
      {"A2", [&] { return a2_vq(fx); }},
      {"A3", [&] { return a3_memorization(fx); }},
      {"A4", [&] { return a4_genre(fx); }},
      {"A5", [&] { return a5_fusion(fx); }},
      {"A6", [&] { return a6_infill(fx); }},
      {"A7", [&] { return a7_metrics(fx); }},
      {"A8", [&] { return a8_determinism(fx); }},
  };
  int failed = 0;
  for (const auto& [id, run] : criteria) {
    if (!o.only.empty() && !o.only.count(id)) continue;
    const auto t0 = Clock::now();
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("%s %s  %s  [%.1f s]\n", id.c_str(), v.pass ? "PASS" : "FAIL", v.summary.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}

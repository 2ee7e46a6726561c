// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include "choreo/data/motion.hpp"
#include "choreo/io/binary.hpp"
#include "choreo/io/checkpoint.hpp"
#include "choreo/util/rng.hpp"

namespace choreo {

std::size_t Corpus::count(Modality m) const {
  return static_cast<std::size_t>(std::count_if(
      records.begin(), records.end(), [m](const MotionRecord& r) { return r.modality == m; }));
}

Corpus generate_corpus(const CorpusSpec& spec) {
  if (spec.genres < 1 || spec.templates < 1 || spec.templates > kTemplateCount) {
    throw DataError("corpus needs >= 1 genre and 1.." + std::to_string(kTemplateCount) +
                    " templates");
  }
  static constexpr std::size_t kDanceLengths[] = {128, 144, 160, 200};
  static constexpr std::size_t kTextLengths[] = {40, 48, 56, 64};
  Rng root(spec.seed);
  Corpus corpus;
  for (int g = 0; g < spec.genres; ++g) {
    for (int i = 0; i < spec.per_genre; ++i) {
      Rng rng = root.fork(static_cast<std::uint64_t>(g) << 20 | static_cast<std::uint64_t>(i));
      const std::size_t frames = kDanceLengths[rng.below(4)];
      DancePair pair = synth_dance(g, frames, rng.next(), spec.genres);
      corpus.records.push_back(
          {Modality::kMusic, g, std::move(pair.motion), std::move(pair.music)});
    }
  }
  for (int t = 0; t < spec.templates; ++t) {
    for (int i = 0; i < spec.per_template; ++i) {
      Rng rng = root.fork(1ULL << 40 | static_cast<std::uint64_t>(t) << 20 |
                          static_cast<std::uint64_t>(i));
      const TextPrompt prompt{t, kTextLengths[rng.below(4)]};
      corpus.records.push_back({Modality::kText, t, synth_text_motion(prompt, rng.next()), {}});
    }
  }
  return corpus;
}

Normalizer Normalizer::fit(const Corpus& corpus, float std_floor) {
  std::vector<double> sum(kMotionChannels, 0.0), sq(kMotionChannels, 0.0);
  double n = 0;
  for (const auto& r : corpus.records) {
    for (std::size_t f = 0; f < r.motion.frames; ++f) {
      for (std::size_t c = 0; c < kMotionChannels; ++c) sum[c] += r.motion.at(f, c);
    }
    n += static_cast<double>(r.motion.frames);
  }
  if (n < 1) throw DataError("cannot fit normalisation on an empty corpus");
  Normalizer out;
  for (std::size_t c = 0; c < kMotionChannels; ++c) out.mean.push_back(float(sum[c] / n));
  for (const auto& r : corpus.records) {
    for (std::size_t f = 0; f < r.motion.frames; ++f) {
      for (std::size_t c = 0; c < kMotionChannels; ++c) {
        const double d = r.motion.at(f, c) - static_cast<double>(out.mean[c]);
        sq[c] += d * d;
      }
    }
  }
  for (std::size_t c = 0; c < kMotionChannels; ++c) {
    out.stddev.push_back(std::max(std_floor, static_cast<float>(std::sqrt(sq[c] / n))));
  }
  return out;
}

void Normalizer::normalize(MotionSequence& m) const {
  for (std::size_t f = 0; f < m.frames; ++f) {
    for (std::size_t c = 0; c < m.channels; ++c) m.at(f, c) = (m.at(f, c) - mean[c]) / stddev[c];
  }
}

void Normalizer::denormalize(MotionSequence& m) const {
  for (std::size_t f = 0; f < m.frames; ++f) {
    for (std::size_t c = 0; c < m.channels; ++c) m.at(f, c) = m.at(f, c) * stddev[c] + mean[c];
  }
}

namespace {

template <typename M>
M crop_or_repeat_impl(const M& in, std::size_t length) {
  if (in.frames < kMinFrames) {
    throw DataError("record has " + std::to_string(in.frames) + " frames, minimum is " +
                    std::to_string(kMinFrames));
  }
  M out = in;
  out.frames = length;
  out.values.resize(length * in.channels);
  for (std::size_t f = 0; f < length; ++f) {
    const std::size_t src = f % in.frames;
    std::copy_n(in.values.data() + src * in.channels, in.channels,
                out.values.data() + f * in.channels);
  }
  return out;
}

}  // namespace

MotionSequence crop_or_repeat(const MotionSequence& m, std::size_t length) {
  return crop_or_repeat_impl(m, length);
}

MusicFeatures crop_or_repeat(const MusicFeatures& m, std::size_t length) {
  return crop_or_repeat_impl(m, length);
}

Preprocessed preprocess(const Corpus& raw, std::size_t length) {
  Preprocessed out;
  for (const auto& r : raw.records) {
    MotionRecord rec{r.modality, r.label, crop_or_repeat(r.motion, length), {}};
    if (r.modality == Modality::kMusic) rec.music = crop_or_repeat(r.music, length);
    out.corpus.records.push_back(std::move(rec));
  }
  out.normalizer = Normalizer::fit(out.corpus);
  for (auto& r : out.corpus.records) out.normalizer.normalize(r.motion);
  return out;
}

namespace {
constexpr char kMagic[4] = {'C', 'H', 'R', '1'};
constexpr std::uint32_t kCorpusVersion = 1;
}  // namespace

std::vector<std::uint8_t> serialize_corpus(const Corpus& corpus) {
  binary::Writer w;
  w.bytes(kMagic, 4);
  w.u32(kCorpusVersion);
  w.u32(static_cast<std::uint32_t>(corpus.records.size()));
  for (const auto& r : corpus.records) {
    w.u8(static_cast<std::uint8_t>(r.modality));
    w.u32(static_cast<std::uint32_t>(r.label));
    w.u32(static_cast<std::uint32_t>(r.motion.frames));
    w.u32(static_cast<std::uint32_t>(r.motion.channels));
    w.u32(static_cast<std::uint32_t>(r.music.channels));
    w.u32(static_cast<std::uint32_t>(r.motion.fps));
    w.f32s(r.motion.values);
    w.f32s(r.music.values);
  }
  return std::move(w.buffer());
}

Corpus deserialize_corpus(const std::vector<std::uint8_t>& bytes) {
  binary::Reader r(bytes);
  char magic[4];
  try {
    r.bytes(magic, 4);
    if (!std::equal(magic, magic + 4, kMagic)) throw DataError("not a corpus file (bad magic)");
    const std::uint32_t version = r.u32();
    if (version != kCorpusVersion) {
      throw DataError("unsupported corpus version " + std::to_string(version));
    }
    const std::uint32_t count = r.u32();
    Corpus corpus;
    for (std::uint32_t i = 0; i < count; ++i) {
      MotionRecord rec;
      const std::uint8_t modality = r.u8();
      if (modality > 1) throw DataError("record " + std::to_string(i) + ": bad modality tag");
      rec.modality = static_cast<Modality>(modality);
      rec.label = static_cast<int>(r.u32());
      const std::size_t frames = r.u32();
      const std::size_t motion_channels = r.u32();
      const std::size_t music_channels = r.u32();
      rec.motion.fps = static_cast<int>(r.u32());
      rec.motion.frames = frames;
      rec.motion.channels = motion_channels;
      rec.motion.values = r.f32s(frames * motion_channels);
      if (music_channels != 0) {
        rec.music.frames = frames;
        rec.music.channels = music_channels;
        rec.music.values = r.f32s(frames * music_channels);
      }
      corpus.records.push_back(std::move(rec));
    }
    if (!r.done()) throw DataError("trailing bytes after corpus records");
    return corpus;
  } catch (const std::runtime_error& e) {
    throw DataError(std::string("corrupt corpus file: ") + e.what());
  }
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  write_file(path, serialize_corpus(corpus));
}

Corpus load_corpus(const std::filesystem::path& path) { return deserialize_corpus(read_file(path)); }

}  // namespace choreo

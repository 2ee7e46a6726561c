// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#include "choreo/io/checkpoint.hpp"

#include <fstream>
#include <iterator>

#include "choreo/io/binary.hpp"

namespace choreo {

namespace {
constexpr char kMagic[4] = {'C', 'K', 'P', 'T'};
}

const StoredTensor& Checkpoint::get(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) {
    throw CheckpointError("checkpoint (stage '" + stage + "') has no tensor '" + name + "'");
  }
  return it->second;
}

std::vector<std::uint8_t> Checkpoint::serialize() const {
  binary::Writer w;
  w.bytes(kMagic, 4);
  w.u32(kVersion);
  w.str(stage);
  w.str(config);
  w.u64(seed);
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    std::size_t n = 1;
    for (auto d : t.shape) n *= d;
    if (n != t.values.size()) throw CheckpointError("tensor '" + name + "' payload/shape mismatch");
    w.str(name);
    w.u32(static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) w.u64(d);
    w.f32s(t.values);
  }
  return std::move(w.buffer());
}

Checkpoint Checkpoint::deserialize(const std::vector<std::uint8_t>& bytes) {
  try {
    binary::Reader r(bytes);
    char magic[4];
    r.bytes(magic, 4);
    if (std::string(magic, 4) != std::string(kMagic, 4)) throw CheckpointError("bad checkpoint magic");
    const std::uint32_t version = r.u32();
    if (version != kVersion) {
      throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
    }
    Checkpoint ck;
    ck.stage = r.str();
    ck.config = r.str();
    ck.seed = r.u64();
    const std::uint32_t count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
      std::string name = r.str();
      StoredTensor t;
      const std::uint32_t nd = r.u32();
      std::size_t n = 1;
      for (std::uint32_t d = 0; d < nd; ++d) {
        t.shape.push_back(static_cast<std::size_t>(r.u64()));
        n *= t.shape.back();
      }
      t.values = r.f32s(n);
      ck.tensors.emplace(std::move(name), std::move(t));
    }
    if (!r.done()) throw CheckpointError("trailing bytes after checkpoint tensor table");
    return ck;
  } catch (const CheckpointError&) {
    throw;
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint: ") + e.what());
  }
}

void Checkpoint::save(const std::filesystem::path& path) const { write_file(path, serialize()); }

Checkpoint Checkpoint::load(const std::filesystem::path& path) { return deserialize(read_file(path)); }

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed) {
  const auto* p = static_cast<const std::uint8_t*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string() + " for reading");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace choreo

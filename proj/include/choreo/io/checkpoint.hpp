// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace choreo {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StoredTensor {
  std::vector<std::size_t> shape;
  std::vector<float> values;
};

/// Repo-wide checkpoint: magic "CKPT", version, stage tag, config echo,
/// RNG seed, then a named table of little-endian f32 tensors (sorted by
/// name, so files are byte-stable).
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::string stage;
  std::string config;
  std::uint64_t seed = 0;
  std::map<std::string, StoredTensor> tensors;

  const StoredTensor& get(const std::string& name) const;
  bool contains(const std::string& name) const { return tensors.count(name) != 0; }

  std::vector<std::uint8_t> serialize() const;
  static Checkpoint deserialize(const std::vector<std::uint8_t>& bytes);

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);
};

/// FNV-1a over raw bytes; used for determinism and freeze audits.
std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed = 0xcbf29ce484222325ULL);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

}  // namespace choreo

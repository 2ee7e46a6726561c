// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <string>

#include "choreo/kernels/kernels.hpp"

namespace choreo::kernels {

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return "scalar";
    case Isa::kAvx2: return "avx2";
    case Isa::kNeon: return "neon";
  }
  return "unknown";
}

std::vector<const KernelTable*> available_tables() {
  std::vector<const KernelTable*> out{&scalar_table()};
  if (const auto* t = avx2_table()) out.push_back(t);
  if (const auto* t = neon_table()) out.push_back(t);
  return out;
}

namespace {

const KernelTable& select() {
  const char* forced = std::getenv("CHOREO_KERNELS");
  const auto tables = available_tables();
  if (forced != nullptr) {
    for (const auto* t : tables) {
      if (std::string(forced) == t->name) return *t;
    }
    return scalar_table();
  }
  return *tables.back();
}

}  // namespace

const KernelTable& active() {
  static const KernelTable& table = select();
  return table;
}

}  // namespace choreo::kernels

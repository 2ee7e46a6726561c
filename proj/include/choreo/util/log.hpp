// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string>

namespace choreo {

/// Progress sink handed to long-running routines; may be empty.
using LogFn = std::function<void(const std::string&)>;

inline void emit(const LogFn& log, const std::string& line) {
  if (log) log(line);
}

}  // namespace choreo

// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// The tensor engine and every model built on it are compiled twice: the
// production float build, and a double build used by the finite-difference
// gradient suite. The two live in distinct inline namespaces so both can be
// linked into one binary.
#if defined(CHOREO_REAL_DOUBLE)
#define CHOREO_REAL_NS f64
#else
#define CHOREO_REAL_NS f32
#endif

namespace choreo {
inline namespace CHOREO_REAL_NS {
#if defined(CHOREO_REAL_DOUBLE)
using Real = double;
#else
using Real = float;
#endif
}  // namespace CHOREO_REAL_NS
}  // namespace choreo

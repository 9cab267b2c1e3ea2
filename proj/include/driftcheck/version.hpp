#pragma once

namespace driftcheck {

inline constexpr const char* kVersion = "0.1.0";

// Bumped whenever a synthetic model builder changes its topology or
// initialization, so fixtures can pin the exact weights they were built with.
inline constexpr int kBuilderVersion = 1;

}  // namespace driftcheck

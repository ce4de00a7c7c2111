#pragma once

#ifndef CRITDRIFT_GIT_REV
#define CRITDRIFT_GIT_REV "unknown"
#endif

namespace critdrift {
inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kGitRevision = CRITDRIFT_GIT_REV;
}  // namespace critdrift

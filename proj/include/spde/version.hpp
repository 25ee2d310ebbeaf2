#pragma once

namespace spde {

inline constexpr const char* kVersion = "spde-heavy-0.1.0";
inline constexpr int kStudySchemaVersion = 1;

}  // namespace spde

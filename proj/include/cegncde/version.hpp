#pragma once

namespace cegncde {

inline constexpr const char* kVersion = "cegncde 0.1.0";
inline constexpr int kCheckpointFormat = 1;

}  // namespace cegncde

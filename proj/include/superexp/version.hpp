#pragma once

namespace superexp {

inline constexpr const char* kVersion = "superexp 0.1.0";

}  // namespace superexp

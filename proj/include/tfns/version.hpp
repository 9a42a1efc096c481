#pragma once

namespace tfns {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace tfns

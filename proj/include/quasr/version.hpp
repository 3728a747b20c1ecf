#pragma once

namespace quasr {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace quasr

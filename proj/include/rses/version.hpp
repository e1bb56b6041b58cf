#pragma once

namespace rses {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace rses

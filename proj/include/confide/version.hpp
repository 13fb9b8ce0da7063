#pragma once

namespace confide {

inline constexpr const char* kVersion = "confide 0.1.0";

} // namespace confide

#pragma once

namespace skld {

inline constexpr const char* version() { return "0.1.0"; }

}  // namespace skld

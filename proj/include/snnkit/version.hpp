#pragma once

namespace snnkit {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace snnkit

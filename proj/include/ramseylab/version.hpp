#pragma once

namespace ramseylab {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace ramseylab

#pragma once

namespace lecam {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace lecam

#pragma once

namespace gmatch {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kResultSchema = "gauss-match/1";

}  // namespace gmatch

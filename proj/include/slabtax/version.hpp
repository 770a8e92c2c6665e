#pragma once

namespace slabtax {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kToolName = "slabtax";

} // namespace slabtax

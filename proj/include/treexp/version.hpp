#pragma once

namespace treexp {

inline constexpr const char* version_string = "0.1.0";
inline constexpr int report_format_version = 1;

}  // namespace treexp

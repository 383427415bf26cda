#pragma once

#include <cstdio>
#include <string>

namespace graphrep::detail {

/// 17 significant digits in scientific form; round-trips a double exactly
/// and is locale independent.
inline std::string format_sci17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

/// Shortest %.17g form; also round-trips exactly.
inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace graphrep::detail

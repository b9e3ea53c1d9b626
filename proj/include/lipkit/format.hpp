#pragma once

#include <charconv>
#include <string>

namespace lipkit {

/// Shortest round-trip decimal form, always with a fractional part
/// ("1.0", "0.9", "1.25"). Used in file names such as `S217_001@0.9`.
inline std::string format_decimal(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, end);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

}  // namespace lipkit

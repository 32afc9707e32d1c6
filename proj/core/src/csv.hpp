#pragma once

#include <string>
#include <string_view>

namespace conceptlens::detail {

/// RFC 4180 quoting for fields that contain a comma, quote or line break.
inline std::string csv_field(std::string_view value) {
  if (value.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(value);
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace conceptlens::detail

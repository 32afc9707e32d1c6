#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

#include <nlohmann/json.hpp>

#include "conceptlens/error.hpp"

namespace conceptlens::detail {

using json = nlohmann::json;

/// Calls `fn(object, line_number)` for every non-blank line. A leading
/// `{"provenance": ...}` line is passed to `on_header` instead.
inline void for_each_jsonl(const std::filesystem::path& path, const std::function<void(const json&, std::size_t)>& fn,
                           const std::function<void(const json&)>& on_header = {}) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kMissingFile, path.string());
  }
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kMalformedInput, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!obj.is_object()) {
      throw Error(ErrorCode::kMalformedInput, path.string() + ":" + std::to_string(line_no) + ": expected object");
    }
    if (line_no == 1 && obj.contains("provenance")) {
      if (on_header) on_header(obj.at("provenance"));
      continue;
    }
    try {
      fn(obj, line_no);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kMalformedInput, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

inline std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::kIoError, "cannot open " + path.string() + " for writing");
  }
  return out;
}

}  // namespace conceptlens::detail

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "conceptlens/embedding_store.hpp"

namespace conceptlens {

inline constexpr std::string_view kToolName = "conceptlens";
inline constexpr std::string_view kToolVersion = "0.1.0";

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

/// Hash of the canonical token table; equal iff two dumps describe the same
/// instances (so concept members are comparable by global index).
std::string instance_space_hash(const Dataset& dataset);

/// Hash of tokens, sentences, annotations and every layer file.
std::string dataset_hash(const Dataset& dataset);

/// Header stamped on every output file.
struct Provenance {
  std::string config_hash;
  std::string dataset_hash;
  std::map<std::string, std::string> extra;

  /// `{"provenance": {...}}` for JSONL outputs.
  [[nodiscard]] std::string json_line() const;
  /// `# provenance: key=value ...` for CSV outputs.
  [[nodiscard]] std::string csv_comment() const;
};

}  // namespace conceptlens

#pragma once

// Binary layer file (`layer_{NN}.ecv`), little-endian:
//   8 bytes  magic "ECVEC01\0"
//   u32      version (1)
//   u32      dim
//   u32      dtype code (0 = float32)
//   u64      token count n
//   n*dim    float32 values, row-major

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>

#include "conceptlens/embedding_layer.hpp"

namespace conceptlens {

inline constexpr char kLayerMagic[8] = {'E', 'C', 'V', 'E', 'C', '0', '1', '\0'};
inline constexpr std::uint32_t kLayerVersion = 1;
inline constexpr std::uint32_t kDtypeFloat32 = 0;
inline constexpr std::size_t kLayerHeaderBytes = 8 + 4 + 4 + 4 + 8;

struct LayerHeader {
  std::uint32_t version = kLayerVersion;
  std::uint32_t dim = 0;
  std::uint32_t dtype = kDtypeFloat32;
  std::uint64_t count = 0;
};

std::string layer_file_name(int layer_id);

/// Parses `layer_NN.ecv`; returns -1 if the name does not follow the pattern.
int parse_layer_file_name(const std::string& file_name);

LayerHeader read_layer_header(const std::filesystem::path& path);

/// Reads a whole layer. Throws NonFiniteValue on NaN/Inf when `require_finite`.
EmbeddingLayer read_layer(const std::filesystem::path& path, int layer_id, bool require_finite = true);

void write_layer(const std::filesystem::path& path, const EmbeddingLayer& layer);

/// Streams rows to disk so dumps larger than memory can be produced.
class LayerWriter {
 public:
  LayerWriter(const std::filesystem::path& path, std::uint32_t dim, std::uint64_t count);
  LayerWriter(const LayerWriter&) = delete;
  LayerWriter& operator=(const LayerWriter&) = delete;
  ~LayerWriter();

  void append_row(std::span<const float> row);
  /// Flushes and verifies that exactly `count` rows were written.
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::uint32_t dim_;
  std::uint64_t count_;
  std::uint64_t written_ = 0;
  bool closed_ = false;
};

}  // namespace conceptlens

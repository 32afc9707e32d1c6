#include "conceptlens/layer_file.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <regex>

#include "conceptlens/error.hpp"

namespace conceptlens {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
T from_le(T value) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return value;
}

template <typename T>
T to_le(T value) {
  return from_le(value);
}

template <typename T>
void put(std::ostream& out, T value) {
  value = to_le(value);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) {
    throw Error(ErrorCode::kHeaderMismatch, path.string() + ": truncated header");
  }
  return from_le(value);
}

LayerHeader read_header(std::istream& in, const std::filesystem::path& path) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kLayerMagic, sizeof(magic)) != 0) {
    throw Error(ErrorCode::kHeaderMismatch, path.string() + ": bad magic");
  }
  LayerHeader header;
  header.version = get<std::uint32_t>(in, path);
  header.dim = get<std::uint32_t>(in, path);
  header.dtype = get<std::uint32_t>(in, path);
  header.count = get<std::uint64_t>(in, path);
  if (header.version != kLayerVersion) {
    throw Error(ErrorCode::kHeaderMismatch, path.string() + ": unsupported version " + std::to_string(header.version));
  }
  if (header.dtype != kDtypeFloat32) {
    throw Error(ErrorCode::kHeaderMismatch, path.string() + ": unsupported dtype " + std::to_string(header.dtype));
  }
  if (header.dim == 0) {
    throw Error(ErrorCode::kHeaderMismatch, path.string() + ": dim is zero");
  }
  return header;
}

void write_header(std::ostream& out, std::uint32_t dim, std::uint64_t count) {
  out.write(kLayerMagic, sizeof(kLayerMagic));
  put<std::uint32_t>(out, kLayerVersion);
  put<std::uint32_t>(out, dim);
  put<std::uint32_t>(out, kDtypeFloat32);
  put<std::uint64_t>(out, count);
}

}  // namespace

EmbeddingLayer::EmbeddingLayer(int layer_id, std::size_t dim, std::vector<float> values)
    : layer_id_(layer_id), dim_(dim), values_(std::move(values)) {
  if (dim_ == 0 || values_.size() % dim_ != 0) {
    throw Error(ErrorCode::kDimensionMismatch, "value count is not a multiple of dim");
  }
}

std::string layer_file_name(int layer_id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "layer_%02d.ecv", layer_id);
  return buf;
}

int parse_layer_file_name(const std::string& file_name) {
  static const std::regex pattern(R"(layer_(\d+)\.ecv)");
  std::smatch m;
  if (!std::regex_match(file_name, m, pattern)) return -1;
  return std::stoi(m[1].str());
}

LayerHeader read_layer_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kMissingFile, path.string());
  }
  LayerHeader header = read_header(in, path);
  const auto expected = kLayerHeaderBytes + header.count * header.dim * sizeof(float);
  const auto actual = std::filesystem::file_size(path);
  if (actual != expected) {
    throw Error(ErrorCode::kHeaderMismatch, path.string() + ": file size " + std::to_string(actual) +
                                                " does not match header (" + std::to_string(expected) + ")");
  }
  return header;
}

EmbeddingLayer read_layer(const std::filesystem::path& path, int layer_id, bool require_finite) {
  const LayerHeader header = read_layer_header(path);
  std::ifstream in(path, std::ios::binary);
  in.seekg(static_cast<std::streamoff>(kLayerHeaderBytes));
  std::vector<float> values(static_cast<std::size_t>(header.count) * header.dim);
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(float)));
  if (!in) {
    throw Error(ErrorCode::kIoError, path.string() + ": short read");
  }
  if constexpr (std::endian::native == std::endian::big) {
    for (auto& v : values) v = from_le(v);
  }
  if (require_finite) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!std::isfinite(values[i])) {
        throw Error(ErrorCode::kNonFiniteValue, path.string() + ": row " + std::to_string(i / header.dim) +
                                                    " col " + std::to_string(i % header.dim));
      }
    }
  }
  return EmbeddingLayer(layer_id, header.dim, std::move(values));
}

void write_layer(const std::filesystem::path& path, const EmbeddingLayer& layer) {
  LayerWriter writer(path, static_cast<std::uint32_t>(layer.dim()), layer.rows());
  for (std::size_t i = 0; i < layer.rows(); ++i) writer.append_row(layer.row(i));
  writer.close();
}

LayerWriter::LayerWriter(const std::filesystem::path& path, std::uint32_t dim, std::uint64_t count)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc), dim_(dim), count_(count) {
  if (!out_) {
    throw Error(ErrorCode::kIoError, "cannot open " + path.string() + " for writing");
  }
  if (dim == 0) {
    throw Error(ErrorCode::kInvalidArgument, "dim must be positive");
  }
  write_header(out_, dim, count);
}

LayerWriter::~LayerWriter() {
  if (!closed_) out_.close();
}

void LayerWriter::append_row(std::span<const float> row) {
  if (row.size() != dim_) {
    throw Error(ErrorCode::kDimensionMismatch, "row has " + std::to_string(row.size()) + " values, expected " +
                                                   std::to_string(dim_));
  }
  if (written_ == count_) {
    throw Error(ErrorCode::kHeaderMismatch, "more rows than declared count");
  }
  if constexpr (std::endian::native == std::endian::little) {
    out_.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
  } else {
    for (float v : row) put(out_, v);
  }
  ++written_;
}

void LayerWriter::close() {
  if (closed_) return;
  closed_ = true;
  out_.flush();
  if (!out_) {
    throw Error(ErrorCode::kIoError, "write failed for " + path_.string());
  }
  out_.close();
  if (written_ != count_) {
    throw Error(ErrorCode::kHeaderMismatch, path_.string() + ": wrote " + std::to_string(written_) + " rows, declared " +
                                                std::to_string(count_));
  }
}

}  // namespace conceptlens

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <functional>
#include <limits>

#include "conceptlens/error.hpp"
#include "conceptlens/layer_file.hpp"
#include "test_support.hpp"

namespace cl = conceptlens;
using testsupport::TempDir;

namespace {

cl::EmbeddingLayer sample_layer(std::size_t rows, std::size_t dim) {
  std::vector<float> v(rows * dim);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(i) * 0.25f - 3.0f;
  return cl::EmbeddingLayer(3, dim, std::move(v));
}

cl::ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const cl::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return cl::ErrorCode::kInvalidArgument;
}

}  // namespace

TEST(LayerFile, NamesRoundTrip) {
  EXPECT_EQ(cl::layer_file_name(0), "layer_00.ecv");
  EXPECT_EQ(cl::layer_file_name(12), "layer_12.ecv");
  EXPECT_EQ(cl::parse_layer_file_name("layer_07.ecv"), 7);
  EXPECT_EQ(cl::parse_layer_file_name("layer_x7.ecv"), -1);
  EXPECT_EQ(cl::parse_layer_file_name("layer_07.bin"), -1);
  EXPECT_EQ(cl::parse_layer_file_name("tokens.jsonl"), -1);
}

TEST(LayerFile, WriteThenReadIsBitIdentical) {
  TempDir dir;
  auto layer = sample_layer(7, 5);
  const auto path = dir / cl::layer_file_name(3);
  cl::write_layer(path, layer);
  const auto back = cl::read_layer(path, 3);
  ASSERT_EQ(back.rows(), 7u);
  ASSERT_EQ(back.dim(), 5u);
  EXPECT_EQ(std::memcmp(back.values().data(), layer.values().data(), layer.values().size_bytes()), 0);
  const auto header = cl::read_layer_header(path);
  EXPECT_EQ(header.count, 7u);
  EXPECT_EQ(header.dim, 5u);
  EXPECT_EQ(header.version, cl::kLayerVersion);
  EXPECT_EQ(std::filesystem::file_size(path), cl::kLayerHeaderBytes + 7 * 5 * sizeof(float));
}

TEST(LayerFile, HeaderBytesAreLittleEndian) {
  TempDir dir;
  const auto path = dir / "layer_00.ecv";
  cl::write_layer(path, sample_layer(2, 3));
  const std::string bytes = testsupport::read_text(path);
  ASSERT_GE(bytes.size(), cl::kLayerHeaderBytes);
  EXPECT_EQ(std::memcmp(bytes.data(), "ECVEC01\0", 8), 0);
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 1u);   // version
  EXPECT_EQ(static_cast<unsigned char>(bytes[12]), 3u);  // dim
  EXPECT_EQ(static_cast<unsigned char>(bytes[16]), 0u);  // dtype
  EXPECT_EQ(static_cast<unsigned char>(bytes[20]), 2u);  // count
}

TEST(LayerFile, StreamingWriterMatchesBulkWriter) {
  TempDir dir;
  const auto layer = sample_layer(4, 3);
  cl::write_layer(dir / "a.ecv", layer);
  {
    cl::LayerWriter w(dir / "b.ecv", 3, 4);
    for (std::size_t r = 0; r < 4; ++r) w.append_row(layer.row(r));
    w.close();
  }
  EXPECT_EQ(testsupport::read_text(dir / "a.ecv"), testsupport::read_text(dir / "b.ecv"));
}

TEST(LayerFile, StreamingWriterRejectsWrongRowCount) {
  TempDir dir;
  cl::LayerWriter w(dir / "c.ecv", 2, 3);
  const float row[2] = {1.0f, 2.0f};
  w.append_row(row);
  EXPECT_EQ(code_of([&] { w.close(); }), cl::ErrorCode::kHeaderMismatch);
  const float wide[3] = {1.0f, 2.0f, 3.0f};
  cl::LayerWriter w2(dir / "d.ecv", 2, 1);
  EXPECT_EQ(code_of([&] { w2.append_row(wide); }), cl::ErrorCode::kDimensionMismatch);
}

TEST(LayerFile, CorruptFilesAreRejected) {
  TempDir dir;
  const auto good = dir / "layer_00.ecv";
  cl::write_layer(good, sample_layer(3, 2));
  std::string bytes = testsupport::read_text(good);

  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  testsupport::write_text(dir / "m.ecv", bad_magic);
  EXPECT_EQ(code_of([&] { cl::read_layer(dir / "m.ecv", 0); }), cl::ErrorCode::kHeaderMismatch);

  testsupport::write_text(dir / "t.ecv", bytes.substr(0, 10));
  EXPECT_EQ(code_of([&] { cl::read_layer(dir / "t.ecv", 0); }), cl::ErrorCode::kHeaderMismatch);

  testsupport::write_text(dir / "s.ecv", bytes.substr(0, bytes.size() - 4));
  EXPECT_EQ(code_of([&] { cl::read_layer(dir / "s.ecv", 0); }), cl::ErrorCode::kHeaderMismatch);

  std::string bad_version = bytes;
  bad_version[8] = 2;
  testsupport::write_text(dir / "v.ecv", bad_version);
  EXPECT_EQ(code_of([&] { cl::read_layer(dir / "v.ecv", 0); }), cl::ErrorCode::kHeaderMismatch);

  std::string bad_dtype = bytes;
  bad_dtype[16] = 1;
  testsupport::write_text(dir / "d.ecv", bad_dtype);
  EXPECT_EQ(code_of([&] { cl::read_layer(dir / "d.ecv", 0); }), cl::ErrorCode::kHeaderMismatch);

  EXPECT_EQ(code_of([&] { cl::read_layer(dir / "absent.ecv", 0); }), cl::ErrorCode::kMissingFile);
}

TEST(LayerFile, NonFiniteValuesRaiseUnlessAllowed) {
  TempDir dir;
  std::vector<float> v(6, 1.0f);
  v[4] = std::numeric_limits<float>::quiet_NaN();
  cl::write_layer(dir / "n.ecv", cl::EmbeddingLayer(0, 2, v));
  EXPECT_EQ(code_of([&] { cl::read_layer(dir / "n.ecv", 0); }), cl::ErrorCode::kNonFiniteValue);
  const auto lenient = cl::read_layer(dir / "n.ecv", 0, false);
  EXPECT_TRUE(std::isnan(lenient.row(2)[0]));
}

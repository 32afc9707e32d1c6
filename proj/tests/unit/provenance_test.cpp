#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "conceptlens/provenance.hpp"
#include "test_support.hpp"

namespace cl = conceptlens;

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(cl::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(cl::sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  testsupport::TempDir dir;
  testsupport::write_text(dir / "f", "abc");
  EXPECT_EQ(cl::sha256_file(dir / "f"), cl::sha256_hex("abc"));
}

TEST(Provenance, HeaderForms) {
  cl::Provenance p{"cfg", "data", {{"k", "600"}}};
  const auto j = nlohmann::json::parse(p.json_line());
  EXPECT_EQ(j["provenance"]["tool"], "conceptlens");
  EXPECT_EQ(j["provenance"]["config_hash"], "cfg");
  EXPECT_EQ(j["provenance"]["dataset_hash"], "data");
  EXPECT_EQ(j["provenance"]["k"], "600");
  EXPECT_EQ(p.csv_comment(), "# provenance: tool=conceptlens version=0.1.0 config_hash=cfg dataset_hash=data k=600");
}

TEST(Provenance, DatasetHashesTrackContent) {
  testsupport::TempDir a, b;
  testsupport::ToyDump d;
  d.sentences = {{"x", "y"}, {"z"}};
  testsupport::write_toy_dump(a.path(), d);
  testsupport::write_toy_dump(b.path(), d);
  const auto da = cl::load_dataset(a.path());
  const auto db = cl::load_dataset(b.path());
  EXPECT_EQ(cl::dataset_hash(da), cl::dataset_hash(db));
  EXPECT_EQ(cl::instance_space_hash(da), cl::instance_space_hash(db));
  d.seed = 2;
  testsupport::write_toy_dump(b.path(), d);
  const auto db2 = cl::load_dataset(b.path());
  EXPECT_NE(cl::dataset_hash(da), cl::dataset_hash(db2));
  EXPECT_EQ(cl::instance_space_hash(da), cl::instance_space_hash(db2));
}

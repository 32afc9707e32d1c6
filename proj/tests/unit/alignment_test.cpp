#include <gtest/gtest.h>

#include <random>
#include <set>

#include "conceptlens/alignment.hpp"
#include "conceptlens/error.hpp"
#include "test_support.hpp"

namespace cl = conceptlens;
using testsupport::make_concept;

namespace {

std::vector<cl::InstanceId> range(cl::InstanceId from, cl::InstanceId to) {
  std::vector<cl::InstanceId> out;
  for (auto i = from; i < to; ++i) out.push_back(i);
  return out;
}

std::set<cl::InstanceId> as_set(const cl::Concept& c) { return {c.members().begin(), c.members().end()}; }

cl::ConceptInventory random_inventory(std::mt19937& rng, std::span<const cl::TokenInstance> tokens, int layer,
                                      std::size_t count) {
  cl::ConceptInventory inv;
  for (std::size_t k = 0; k < count; ++k) {
    std::vector<cl::InstanceId> members;
    const std::size_t size = 1 + rng() % 12;
    const cl::InstanceId base = static_cast<cl::InstanceId>(rng() % (tokens.size() - 12));
    for (std::size_t j = 0; j < size; ++j) members.push_back(base + static_cast<cl::InstanceId>(rng() % 12));
    inv.add(make_concept("m", layer, "c" + std::to_string(k), members, tokens));
  }
  return inv;
}

}  // namespace

TEST(Overlap, HandValuesAndBoundary) {
  const auto tokens = testsupport::plain_tokens(30);
  const auto c1 = make_concept("a", 0, "c1", range(0, 10), tokens);
  const auto c2 = make_concept("b", 0, "c2", range(1, 25), tokens);
  EXPECT_DOUBLE_EQ(cl::overlap(c1, c2), 0.9);
  EXPECT_FALSE(cl::is_aligned(c1, c2, 0.95).aligned);
  EXPECT_TRUE(cl::is_aligned(c1, c2, 0.90).aligned);
  EXPECT_FALSE(cl::is_aligned(c1, c2).aligned);
  EXPECT_EQ(cl::is_aligned(c1, c2).theta, 0.95);
  EXPECT_DOUBLE_EQ(cl::overlap(c1, c1), 1.0);
  EXPECT_DOUBLE_EQ(cl::overlap(c1, make_concept("b", 0, "c3", range(20, 30), tokens)), 0.0);
}

TEST(Overlap, AsymmetryWitness) {
  const auto tokens = testsupport::plain_tokens(10);
  const auto small = make_concept("a", 0, "s", {1, 2}, tokens);
  const auto big = make_concept("a", 0, "b", range(0, 8), tokens);
  EXPECT_DOUBLE_EQ(cl::overlap(small, big), 1.0);
  EXPECT_DOUBLE_EQ(cl::overlap(big, small), 0.25);
}

TEST(Overlap, ThetaRange) {
  const auto tokens = testsupport::plain_tokens(3);
  const auto c = make_concept("a", 0, "c", {0, 1}, tokens);
  for (double bad : {0.0, -0.1, 1.0000001, 2.0}) {
    try {
      cl::is_aligned(c, c, bad);
      FAIL() << bad;
    } catch (const cl::Error& e) {
      EXPECT_EQ(e.code(), cl::ErrorCode::kThetaOutOfRange);
    }
  }
  EXPECT_TRUE(cl::is_aligned(c, c, 1.0).aligned);
  EXPECT_TRUE(cl::is_aligned(c, c, 1e-9).aligned);
}

TEST(Overlap, SurfaceMode) {
  std::vector<cl::TokenInstance> a = {{0, 0, 0, "good"}, {1, 0, 1, "film"}, {2, 0, 2, "good"}, {3, 0, 3, "bad"}};
  std::vector<cl::TokenInstance> b = {{0, 0, 0, "film"}, {1, 0, 1, "good"}};
  const auto c1 = make_concept("a", 0, "c", {0, 1, 2, 3}, a);
  const auto c2 = make_concept("b", 0, "c", {0, 1}, b);
  EXPECT_DOUBLE_EQ(cl::overlap_by_surface(c1, a, c2), 0.75);
  cl::ConceptInventory targets;
  targets.add(c2);
  cl::MatchOptions opts;
  opts.mode = cl::MatchMode::kSurface;
  opts.from_tokens = a;
  opts.to_tokens = b;
  const cl::OverlapIndex index(targets, opts);
  EXPECT_EQ(index.overlaps(c1), (std::vector<double>{0.75}));
}

// Exhaustive double-loop oracle against the inverted index, plus the
// reflexivity and theta-monotonicity properties.
TEST(Overlap, IndexMatchesExhaustiveOracle) {
  std::mt19937 rng(17);
  const auto tokens = testsupport::plain_tokens(80);
  const std::vector<double> thetas = {0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 1.0};
  std::size_t cases = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto from = random_inventory(rng, tokens, 0, 1 + rng() % 50);
    const auto to = random_inventory(rng, tokens, 1, 1 + rng() % 50);
    const cl::OverlapIndex index(to);
    for (const auto& c : from.concepts()) {
      const auto got = index.overlaps(c);
      for (std::size_t k = 0; k < to.size(); ++k) {
        const double expected = testsupport::oracle_overlap(as_set(c), as_set(to[k]));
        ASSERT_EQ(got[k], expected);
        ASSERT_EQ(cl::overlap(c, to[k]), expected);
        bool previous = true;
        for (auto it = thetas.begin(); it != thetas.end(); ++it) {
          const bool aligned = cl::is_aligned(c, to[k], *it).aligned;
          ASSERT_EQ(aligned, expected >= *it);
          // Aligned at theta implies aligned at every smaller theta.
          if (aligned) ASSERT_TRUE(previous);
          previous = aligned;
        }
        ++cases;
      }
      ASSERT_TRUE(cl::is_aligned(c, c, 1.0).aligned);
    }
  }
  EXPECT_GE(cases, 1000u);
}

TEST(LayerMatrix, IdenticalInventoriesGiveFullDiagonal) {
  std::mt19937 rng(2);
  const auto tokens = testsupport::plain_tokens(60);
  cl::LayeredInventories inv;
  for (int l = 0; l < 3; ++l) inv[l] = random_inventory(rng, tokens, l, 8);
  const auto m = cl::layer_pair_matrix(inv, inv);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(m.at(i, i), 100.0);
  for (double v : m.cells) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 100.0);
  }
}

TEST(LayerMatrix, HandBuiltThreeLayers) {
  const auto tokens = testsupport::plain_tokens(40);
  cl::LayeredInventories ft, base;
  // Base layers: 0 = {0..9}, {10..19}; 1 = {0..19}; 2 = {20..29}, {30..39}.
  base[0].add(make_concept("b", 0, "c0", range(0, 10), tokens));
  base[0].add(make_concept("b", 0, "c1", range(10, 20), tokens));
  base[1].add(make_concept("b", 1, "c0", range(0, 20), tokens));
  base[2].add(make_concept("b", 2, "c0", range(20, 30), tokens));
  base[2].add(make_concept("b", 2, "c1", range(30, 40), tokens));
  // ft layer 0: {0..9} and {20..29}; layer 1: {0..4}, {15..24}; layer 2: none eligible.
  ft[0].add(make_concept("f", 0, "c0", range(0, 10), tokens));
  ft[0].add(make_concept("f", 0, "c1", range(20, 30), tokens));
  ft[1].add(make_concept("f", 1, "c0", range(0, 5), tokens));
  ft[1].add(make_concept("f", 1, "c1", range(15, 25), tokens));
  ft[2] = cl::ConceptInventory();
  const auto m = cl::layer_pair_matrix(ft, base, 0.95);
  const std::vector<double> expected = {50, 50, 50,  //
                                        50, 50, 0,   //
                                        0,  0,  0};
  EXPECT_EQ(m.cells, expected);
  EXPECT_EQ(m.row_eligible, (std::vector<std::size_t>{2, 2, 0}));
  EXPECT_EQ(m.empty_row, (std::vector<bool>{false, false, true}));
  // At theta 0.5 the straddling concept aligns to base layer 0 and 2.
  const auto loose = cl::layer_pair_matrix(ft, base, 0.5);
  EXPECT_EQ(loose.at(1, 0), 100.0);
  EXPECT_EQ(loose.at(1, 2), 50.0);
}

TEST(LayerMatrix, InstanceSpaceMismatchUnlessSurfaceMode) {
  const auto tokens = testsupport::plain_tokens(10);
  cl::LayeredInventories a, b;
  a[0] = cl::ConceptInventory(10, "h1");
  b[0] = cl::ConceptInventory(12, "h2");
  a[0].add(make_concept("a", 0, "c0", {1, 2}, tokens));
  b[0].add(make_concept("b", 0, "c0", {1, 2}, tokens));
  try {
    cl::layer_pair_matrix(a, b);
    FAIL();
  } catch (const cl::Error& e) {
    EXPECT_EQ(e.code(), cl::ErrorCode::kInstanceSpaceMismatch);
  }
  cl::MatchOptions surface;
  surface.mode = cl::MatchMode::kSurface;
  surface.from_tokens = tokens;
  surface.to_tokens = tokens;
  EXPECT_EQ(cl::layer_pair_matrix(a, b, 0.95, surface).at(0, 0), 100.0);
}

TEST(HumanAlignment, NinetySixPercentNounCountsUnderNN) {
  const auto tokens = testsupport::plain_tokens(60);
  cl::ConceptInventory human;
  human.add(make_concept("pos", std::nullopt, "NN", range(0, 48), tokens, cl::ConceptKind::kHuman));
  human.add(make_concept("pos", std::nullopt, "JJ", range(48, 60), tokens, cl::ConceptKind::kHuman));
  cl::LayeredInventories enc;
  std::vector<cl::InstanceId> members = range(0, 24);
  members.push_back(50);  // 24 of 25 = 96% NN
  enc[3].add(make_concept("m", 3, "c0", members, tokens));
  enc[3].add(make_concept("m", 3, "c1", {0, 1, 50, 51}, tokens));
  const auto h = cl::human_alignment_counts(enc, human, 0.95);
  EXPECT_EQ(h.tags, (std::vector<std::string>{"JJ", "NN"}));
  EXPECT_EQ(h.counts.at(3).at("NN"), 1u);
  EXPECT_EQ(h.counts.at(3).at("JJ"), 0u);
  EXPECT_EQ(h.eligible.at(3), 2u);
  EXPECT_DOUBLE_EQ(h.percent_aligned(), 50.0);
}

TEST(HumanAlignment, TiesGoToSmallerTagName) {
  const auto tokens = testsupport::plain_tokens(10);
  cl::ConceptInventory human;
  human.add(make_concept("t", std::nullopt, "ZZ", {0, 1, 2, 3}, tokens, cl::ConceptKind::kHuman));
  human.add(make_concept("t", std::nullopt, "AA", {0, 1, 2, 3}, tokens, cl::ConceptKind::kHuman));
  cl::LayeredInventories enc;
  enc[0].add(make_concept("m", 0, "c0", {0, 1}, tokens));
  const auto h = cl::human_alignment_counts(enc, human, 0.95);
  EXPECT_EQ(h.counts.at(0).at("AA"), 1u);
  EXPECT_EQ(h.counts.at(0).at("ZZ"), 0u);
}

TEST(HumanAlignment, PureClustersSumToEligible) {
  const auto tokens = testsupport::plain_tokens(30);
  cl::ConceptInventory human;
  human.add(make_concept("t", std::nullopt, "A", range(0, 10), tokens, cl::ConceptKind::kHuman));
  human.add(make_concept("t", std::nullopt, "B", range(10, 30), tokens, cl::ConceptKind::kHuman));
  cl::LayeredInventories enc;
  enc[1].add(make_concept("m", 1, "c0", range(0, 5), tokens));
  enc[1].add(make_concept("m", 1, "c1", range(5, 10), tokens));
  enc[1].add(make_concept("m", 1, "c2", range(10, 30), tokens));
  const auto h = cl::human_alignment_counts(enc, human);
  EXPECT_EQ(h.aligned(1), h.eligible.at(1));
  EXPECT_DOUBLE_EQ(h.percent_aligned(), 100.0);
}

TEST(Format, OneDecimal) {
  EXPECT_EQ(cl::format_percent(91.46), "91.5");
  EXPECT_EQ(cl::format_percent(0.0), "0.0");
  EXPECT_EQ(cl::format_percent(100.0), "100.0");
}

TEST(LayerMatrix, CsvLayout) {
  testsupport::TempDir dir;
  cl::LayerMatrix m;
  m.rows = {0, 1};
  m.cols = {0, 1};
  m.cells = {100.0, 12.5, 0.0, 0.0};
  m.row_eligible = {4, 0};
  m.empty_row = {false, true};
  cl::write_layer_matrix_csv(dir / "m.csv", m);
  const auto text = testsupport::read_text(dir / "m.csv");
  EXPECT_NE(text.find("ft_layer,0,1,eligible,flag\n0,100.0,12.5,4,\n1,0.0,0.0,0,empty\n"), std::string::npos);
  EXPECT_EQ(text.rfind("# provenance:", 0), 0u);
}

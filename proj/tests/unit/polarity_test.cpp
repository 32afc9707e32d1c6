#include <gtest/gtest.h>

#include <random>

#include "conceptlens/error.hpp"
#include "conceptlens/polarity.hpp"
#include "test_support.hpp"

namespace cl = conceptlens;
using testsupport::make_concept;

namespace {

std::vector<cl::InstanceId> range(cl::InstanceId from, cl::InstanceId to) {
  std::vector<cl::InstanceId> out;
  for (auto i = from; i < to; ++i) out.push_back(i);
  return out;
}

/// Task concepts over `tokens`: each class owns a contiguous instance block.
cl::ConceptInventory task_inventory(std::span<const cl::TokenInstance> tokens,
                                    const std::vector<std::pair<std::string, std::vector<cl::InstanceId>>>& blocks) {
  cl::ConceptInventory inv(tokens.size(), "space");
  std::string labels;
  for (const auto& [cls, members] : blocks) {
    inv.add(make_concept("task", std::nullopt, cls, members, tokens, cl::ConceptKind::kTask));
    labels += (labels.empty() ? "" : ",") + cls;
  }
  inv.parameters["labels"] = labels;
  return inv;
}

}  // namespace

TEST(Polarity, NineteenOfTwentyIsToxic) {
  const auto tokens = testsupport::plain_tokens(100);
  const auto task = task_inventory(tokens, {{"toxic", range(0, 40)}, {"nontoxic", range(50, 90)}});
  auto members = range(0, 19);
  members.push_back(95);
  const auto v = cl::classify_concept(make_concept("m", 1, "c0", members, tokens), task, 0.95);
  EXPECT_EQ(v.label, "toxic");
  EXPECT_DOUBLE_EQ(v.overlap_by_class.at("toxic"), 0.95);
  EXPECT_DOUBLE_EQ(v.overlap_by_class.at("nontoxic"), 0.0);
  members.back() = 96;
  members.push_back(97);
  EXPECT_TRUE(cl::classify_concept(make_concept("m", 1, "c1", members, tokens), task, 0.95).neutral());
}

TEST(Polarity, HalfSplitIsNeutralAndPureIsLabelled) {
  const auto tokens = testsupport::plain_tokens(40);
  const auto task = task_inventory(tokens, {{"+ve", range(0, 20)}, {"-ve", range(20, 40)}});
  const auto split = cl::classify_concept(make_concept("m", 0, "c0", {0, 1, 20, 21}, tokens), task);
  EXPECT_EQ(split.label, cl::kNeutral);
  const auto pure = cl::classify_concept(make_concept("m", 0, "c1", {3, 4, 5}, tokens), task);
  EXPECT_EQ(pure.label, "+ve");
  EXPECT_DOUBLE_EQ(pure.overlap_by_class.at("+ve"), 1.0);
  // With a low threshold both classes qualify; the larger overlap wins.
  const auto lean = cl::classify_concept(make_concept("m", 0, "c2", {0, 20, 21}, tokens), task, 0.3);
  EXPECT_EQ(lean.label, "-ve");
  EXPECT_THROW(cl::classify_concept(make_concept("m", 0, "c3", {0}, tokens), task, 0.0), cl::Error);
}

TEST(Polarity, TenConceptsThreePure) {
  const auto tokens = testsupport::plain_tokens(200);
  const auto task = task_inventory(tokens, {{"+ve", range(0, 60)}, {"-ve", range(100, 160)}});
  cl::LayeredInventories enc;
  for (cl::InstanceId c = 0; c < 3; ++c) enc[5].add(make_concept("m", 5, "c" + std::to_string(c), range(c * 20, c * 20 + 20), tokens));
  for (cl::InstanceId c = 3; c < 10; ++c) {
    // Mixed: half from each class block, or from words in no task concept.
    const cl::InstanceId base = (c - 3) * 5;
    auto members = range(100 + base, 100 + base + 5);
    for (auto m : range(60 + base, 60 + base + 5)) members.push_back(m);
    enc[5].add(make_concept("m", 5, "c" + std::to_string(c), members, tokens));
  }
  const auto counts = cl::polarity_counts(enc, task, 0.95);
  EXPECT_EQ(counts.classes, (std::vector<std::string>{"+ve", "-ve", "neutral"}));
  EXPECT_EQ(counts.counts.at(5).at("+ve"), 3u);
  EXPECT_EQ(counts.counts.at(5).at("-ve"), 0u);
  EXPECT_EQ(counts.counts.at(5).at("neutral"), 7u);
  EXPECT_EQ(counts.eligible.at(5), 10u);
}

TEST(Polarity, ThreeClassesAllNeutralWithoutPurity) {
  const auto tokens = testsupport::plain_tokens(90);
  const auto task = task_inventory(tokens, {{"a", range(0, 30)}, {"b", range(30, 60)}, {"c", range(60, 90)}});
  cl::LayeredInventories enc;
  for (int l = 0; l < 3; ++l) {
    for (cl::InstanceId k = 0; k < 10; ++k) {
      enc[l].add(make_concept("m", l, "c" + std::to_string(k), {k, 30 + k, 60 + k}, tokens));
    }
  }
  const auto counts = cl::polarity_counts(enc, task);
  for (int l = 0; l < 3; ++l) {
    EXPECT_EQ(counts.counts.at(l).at("neutral"), 10u);
    EXPECT_EQ(counts.counts.at(l).at("a") + counts.counts.at(l).at("b") + counts.counts.at(l).at("c"), 0u);
  }
}

// Counts sum to the eligible count and no concept is labelled twice, on
// random inventories and both overlap modes.
TEST(Polarity, CountsSumToEligibleProperty) {
  std::mt19937 rng(8);
  std::vector<cl::TokenInstance> tokens;
  for (cl::InstanceId i = 0; i < 120; ++i) tokens.push_back({i, i / 6, i % 6, "w" + std::to_string(i % 90)});
  const auto task = task_inventory(tokens, {{"p", range(0, 30)}, {"q", range(60, 90)}});
  for (int trial = 0; trial < 50; ++trial) {
    cl::LayeredInventories enc;
    for (int l = 0; l < 2; ++l) {
      for (int k = 0; k < 15; ++k) {
        std::vector<cl::InstanceId> m;
        const auto start = static_cast<cl::InstanceId>(rng() % 100);
        for (int j = 0; j < 1 + static_cast<int>(rng() % 10); ++j) m.push_back(start + static_cast<cl::InstanceId>(rng() % 20));
        enc[l].add(make_concept("m", l, "c" + std::to_string(k), m, tokens));
      }
    }
    for (auto mode : {cl::PolarityMode::kInstance, cl::PolarityMode::kWordType}) {
      const auto verdicts = cl::classify_layers(enc, task, 0.95, mode);
      const auto counts = cl::polarity_counts(verdicts, std::vector<std::string>{"p", "q"});
      for (const auto& [layer, per_class] : counts.counts) {
        std::size_t total = 0;
        for (const auto& [cls, n] : per_class) total += n;
        EXPECT_EQ(total, counts.eligible.at(layer));
      }
      for (const auto& [layer, list] : verdicts) {
        for (const auto& v : list) {
          int qualifying = 0;
          for (const auto& [cls, ov] : v.overlap_by_class) qualifying += ov >= 0.95;
          EXPECT_LE(qualifying, 1);
          // The indexed path agrees with the single-concept path.
          const auto* c = enc.at(layer).find(v.concept_id);
          ASSERT_NE(c, nullptr);
          EXPECT_EQ(cl::classify_concept(*c, task, 0.95, mode).label, v.label);
        }
      }
    }
  }
}

TEST(Polarity, WordTypeModeComparesSurfaceForms) {
  std::vector<cl::TokenInstance> tokens = {{0, 0, 0, "great"}, {1, 0, 1, "fun"}, {2, 1, 0, "awful"},
                                           {3, 1, 1, "fun"},   {4, 2, 0, "great"}, {5, 2, 1, "superb"}};
  cl::ConceptInventory task;
  task.add(make_concept("task", std::nullopt, "+ve", {0, 4, 5}, tokens, cl::ConceptKind::kTask));
  task.add(make_concept("task", std::nullopt, "-ve", {2}, tokens, cl::ConceptKind::kTask));
  // Instances 1 and 4: word types {fun, great}; instance overlap with +ve is 1/2.
  const auto c = make_concept("m", 0, "c0", {1, 4}, tokens);
  const auto by_instance = cl::classify_concept(c, task, 0.5);
  const auto by_type = cl::classify_concept(c, task, 0.5, cl::PolarityMode::kWordType);
  EXPECT_DOUBLE_EQ(by_instance.overlap_by_class.at("+ve"), 0.5);
  EXPECT_DOUBLE_EQ(by_type.overlap_by_class.at("+ve"), 0.5);
  const auto d = make_concept("m", 0, "c1", {0, 5}, tokens);
  EXPECT_EQ(cl::classify_concept(d, task, 1.0, cl::PolarityMode::kWordType).label, "+ve");
  EXPECT_EQ(cl::task_classes(task), (std::vector<std::string>{"+ve", "-ve"}));
}

TEST(Polarity, FilesRoundTrip) {
  testsupport::TempDir dir;
  std::vector<cl::PolarityVerdict> verdicts = {
      {cl::ConceptId{"m", 2, "c0"}, "+ve", {{"+ve", 1.0}, {"-ve", 0.0}}},
      {cl::ConceptId{"m", 2, "c1"}, "neutral", {{"+ve", 0.25}, {"-ve", 0.5}}},
  };
  const auto path = dir / cl::polarity_file_name(2);
  EXPECT_EQ(path.filename(), "polarity_layer02.jsonl");
  cl::write_polarity_jsonl(path, verdicts);
  const auto back = cl::read_polarity_jsonl(path);
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back[i].concept_id, verdicts[i].concept_id);
    EXPECT_EQ(back[i].label, verdicts[i].label);
    EXPECT_EQ(back[i].overlap_by_class, verdicts[i].overlap_by_class);
  }
  EXPECT_THROW(cl::read_polarity_jsonl(dir / "none.jsonl"), cl::Error);

  cl::LayeredVerdicts lv{{2, verdicts}};
  const auto counts = cl::polarity_counts(lv, std::vector<std::string>{"+ve", "-ve"});
  cl::write_polarity_summary_csv(dir / "s.csv", counts);
  const auto text = testsupport::read_text(dir / "s.csv");
  EXPECT_NE(text.find("layer,eligible,+ve,-ve,neutral\n2,2,1,0,1\n"), std::string::npos);
}

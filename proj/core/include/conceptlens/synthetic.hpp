#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace conceptlens {

/// Shape of a generated two-model fixture.
///
/// The vocabulary is split into `groups` groups of `words_per_group` word
/// types. In the fine-tuned dump, layers >= `planted_from_layer` place every
/// instance of a word near its group's centre, so Ward clustering at
/// K = groups recovers the groups. A `pure_fraction` of groups only occurs in
/// sentences of one label and therefore forms a class-pure cluster. All other
/// layers, and every layer of the base dump, group words by a stride that
/// mixes classes, so their clusters carry no polarity.
struct SyntheticSpec {
  std::size_t instances = 10000;
  std::size_t tokens_per_sentence = 10;
  std::size_t dim = 32;
  std::size_t layers = 4;
  std::size_t groups = 50;
  std::size_t words_per_group = 8;
  double pure_fraction = 0.3;
  int planted_from_layer = 2;
  std::vector<std::string> labels = {"positive", "negative"};
  std::string tag_task = "pos";
  double centre_scale = 8.0;
  double noise = 0.05;
  std::uint64_t seed = 7;
};

/// Ground truth for a generated fixture.
struct SyntheticTruth {
  /// Per fine-tuned layer: label -> number of planted class-pure clusters
  /// ("neutral" holds the rest).
  std::map<int, std::map<std::string, std::size_t>> ft_polarity;
  /// Per base layer: always all neutral.
  std::map<int, std::map<std::string, std::size_t>> base_polarity;
  std::size_t sentences = 0;
  std::size_t instances = 0;
};

/// Writes `root/base` and `root/ft` dumps sharing one token table, sentence
/// file and tag file, plus `root/truth.json`. Deterministic in `spec.seed`.
SyntheticTruth write_synthetic_fixture(const std::filesystem::path& root, const SyntheticSpec& spec = {});

}  // namespace conceptlens

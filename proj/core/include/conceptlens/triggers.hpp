#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "conceptlens/concepts.hpp"
#include "conceptlens/polarity.hpp"
#include "conceptlens/provider.hpp"

namespace conceptlens {

struct TriggerCandidate {
  ConceptId concept_id;
  std::string cls;
  double overlap = 0.0;  ///< overlap with the task concept of `cls`
  std::vector<std::string> trigger_words;  ///< distinct surface forms, sorted
};

struct FlipReport {
  ConceptId concept_id;
  std::string source_class;
  std::string target_class;
  std::size_t n_attempts = 0;
  std::size_t n_flips = 0;
  double accuracy = 0.0;  ///< n_flips / n_attempts, 0 when there were no attempts
};

/// Top `k` concepts labelled `cls`, ranked by overlap (desc), word-type
/// count (desc), then id. `inventory` supplies the word types.
std::vector<TriggerCandidate> select_top_polarized(std::span<const PolarityVerdict> verdicts,
                                                   const ConceptInventory& inventory, const std::string& cls,
                                                   std::size_t k = 5);

/// Sentences grouped by the provider's prediction on their plain text.
std::map<std::string, std::vector<Sentence>> partition_by_prediction(std::span<const Sentence> sentences,
                                                                     PredictionProvider& provider);

/// Prepends each trigger word (plus one space) to each sentence and counts
/// predictions equal to the candidate's class. `sentences` must be those the
/// provider predicts as `source_class`.
FlipReport flipping_accuracy(const TriggerCandidate& candidate, std::span<const Sentence> sentences,
                             PredictionProvider& provider, const std::string& source_class);

struct TriggerDirection {
  std::string source;
  std::string target;

  /// e.g. "+ve→-ve"
  [[nodiscard]] std::string label() const;
};

/// Per (direction, layer): pooled (micro) and per-concept mean (macro)
/// percentages. A cell is empty when the target class has no candidates in
/// that layer or no sentence is predicted as the source class.
struct TriggerTable {
  std::vector<int> layers;
  std::vector<TriggerDirection> directions;
  std::vector<std::optional<double>> micro;  ///< row-major [direction][layer]
  std::vector<std::optional<double>> macro;
  std::vector<FlipReport> details;
  std::map<int, std::vector<ConceptId>> candidates;  ///< layer -> ranked candidate ids, all classes

  [[nodiscard]] const std::optional<double>& micro_at(std::size_t d, std::size_t l) const {
    return micro[d * layers.size() + l];
  }
  [[nodiscard]] const std::optional<double>& macro_at(std::size_t d, std::size_t l) const {
    return macro[d * layers.size() + l];
  }
};

/// The final three layer ids of `available` (all of them if fewer).
std::vector<int> default_trigger_layers(std::span<const int> available);

/// `verdicts` and `inventories` are keyed by layer; every requested layer
/// must be present in both (MissingUpstreamArtifact otherwise). Directions
/// enumerate ordered class pairs in `classes` order.
TriggerTable trigger_report(const LayeredVerdicts& verdicts, const std::map<int, ConceptInventory>& inventories,
                            std::span<const int> layers, std::span<const std::string> classes, std::size_t k,
                            std::span<const Sentence> sentences, PredictionProvider& provider);

inline constexpr std::string_view kMissingCell = "—";

/// Table 2 layout: rows = direction, columns = layer ids, one decimal.
void write_trigger_table_csv(const std::filesystem::path& path, const TriggerTable& table, bool macro,
                             const Provenance& provenance = {});
void write_flip_details_jsonl(const std::filesystem::path& path, const TriggerTable& table,
                              const Provenance& provenance = {});

}  // namespace conceptlens

#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "conceptlens/alignment.hpp"
#include "conceptlens/concepts.hpp"

namespace conceptlens {

inline constexpr std::string_view kNeutral = "neutral";

/// kInstance matches member instances against task-concept instances;
/// kWordType compares distinct surface forms instead.
enum class PolarityMode { kInstance, kWordType };

struct PolarityVerdict {
  ConceptId concept_id;
  std::string label;  ///< class name or "neutral"
  std::map<std::string, double> overlap_by_class;

  [[nodiscard]] bool neutral() const noexcept { return label == kNeutral; }
};

/// Class names of a task inventory in label-set order (falls back to concept
/// names when the inventory does not record its label set).
std::vector<std::string> task_classes(const ConceptInventory& task_inventory);

/// Labels `c` with the class whose task concept it θ-aligns to, else
/// "neutral". With theta <= 0.5 several classes can qualify; the largest
/// overlap wins, ties by class name.
PolarityVerdict classify_concept(const Concept& c, const ConceptInventory& task_inventory, double theta = kDefaultTheta,
                                 PolarityMode mode = PolarityMode::kInstance);

using LayeredVerdicts = std::map<int, std::vector<PolarityVerdict>>;

LayeredVerdicts classify_layers(const LayeredInventories& encoded, const ConceptInventory& task_inventory,
                                double theta = kDefaultTheta, PolarityMode mode = PolarityMode::kInstance);

struct PolarityCounts {
  std::vector<std::string> classes;                           ///< task classes then "neutral"
  std::map<int, std::map<std::string, std::size_t>> counts;   ///< layer -> class -> count
  std::map<int, std::size_t> eligible;
};

PolarityCounts polarity_counts(const LayeredVerdicts& verdicts, std::span<const std::string> classes);

PolarityCounts polarity_counts(const LayeredInventories& encoded, const ConceptInventory& task_inventory,
                               double theta = kDefaultTheta, PolarityMode mode = PolarityMode::kInstance);

/// `polarity_layer{NN}.jsonl`
std::string polarity_file_name(int layer);

void write_polarity_jsonl(const std::filesystem::path& path, std::span<const PolarityVerdict> verdicts,
                          const Provenance& provenance = {});
std::vector<PolarityVerdict> read_polarity_jsonl(const std::filesystem::path& path);

/// Stacked-bar data: one row per layer, one column per class plus neutral.
void write_polarity_summary_csv(const std::filesystem::path& path, const PolarityCounts& counts,
                                const Provenance& provenance = {});

}  // namespace conceptlens

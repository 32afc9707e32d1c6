#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "conceptlens/concepts.hpp"
#include "conceptlens/provenance.hpp"

namespace conceptlens {

inline constexpr double kDefaultTheta = 0.95;

/// Per-layer inventories keyed by layer id.
using LayeredInventories = std::map<int, ConceptInventory>;

/// How members of two concepts are matched.
///  - kInstance: same global index (both concepts from one dataset pass).
///  - kSurface: same surface form (concepts from different passes).
enum class MatchMode { kInstance, kSurface };

struct MatchOptions {
  MatchMode mode = MatchMode::kInstance;
  /// Surface lookups for kSurface; indexed by global index.
  std::span<const TokenInstance> from_tokens;
  std::span<const TokenInstance> to_tokens;
};

struct AlignmentResult {
  ConceptId from_id;
  ConceptId to_id;
  double overlap = 0.0;
  bool aligned = false;
  double theta = kDefaultTheta;
};

/// Throws ThetaOutOfRange unless 0 < theta <= 1.
void check_theta(double theta);

/// |members(c1) ∩ members(c2)| / |members(c1)|. Not symmetric.
double overlap(const Concept& c1, const Concept& c2);

/// Fraction of c1's instances whose surface form is a word type of c2.
double overlap_by_surface(const Concept& c1, std::span<const TokenInstance> c1_tokens, const Concept& c2);

/// θ-alignment verdict: aligned iff overlap >= theta.
AlignmentResult is_aligned(const Concept& c1, const Concept& c2, double theta = kDefaultTheta);

/// Inverted index from instance (or surface form) to the concepts of one
/// inventory that contain it. Answers "intersection size with every target
/// concept" in O(|c| * multiplicity).
class OverlapIndex {
 public:
  explicit OverlapIndex(const ConceptInventory& targets, const MatchOptions& options = {});

  /// Intersection counts of `c` with every target concept, in inventory order.
  [[nodiscard]] std::vector<std::size_t> intersections(const Concept& c) const;
  /// Overlap fractions of `c` with every target concept.
  [[nodiscard]] std::vector<double> overlaps(const Concept& c) const;
  [[nodiscard]] const ConceptInventory& targets() const noexcept { return *targets_; }

 private:
  const ConceptInventory* targets_;
  MatchOptions options_;
  std::vector<std::size_t> offsets_;
  std::vector<std::uint32_t> concept_ids_;
  std::map<std::string, std::vector<std::uint32_t>, std::less<>> by_surface_;
};

/// Rows are fine-tuned layers, columns base layers. Cell (i, j) is the
/// percentage of eligible fine-tuned layer-i concepts aligned to at least
/// one eligible base layer-j concept.
struct LayerMatrix {
  std::vector<int> rows;
  std::vector<int> cols;
  std::vector<double> cells;                 ///< row-major, percentages in [0, 100]
  std::vector<std::size_t> row_eligible;     ///< denominator per row
  std::vector<bool> empty_row;               ///< true where the denominator is zero
  double theta = kDefaultTheta;

  [[nodiscard]] double at(std::size_t i, std::size_t j) const { return cells[i * cols.size() + j]; }
};

inline constexpr std::string_view kLayerMatrixConvention =
    "rows=fine-tuned layer; cols=base layer; cell=100*aligned eligible fine-tuned concepts/eligible fine-tuned "
    "concepts in the row layer";

/// Both sides must be eligibility-filtered. In instance mode, throws
/// InstanceSpaceMismatch when token counts differ.
LayerMatrix layer_pair_matrix(const LayeredInventories& fine_tuned, const LayeredInventories& base,
                              double theta = kDefaultTheta, const MatchOptions& options = {});

/// Per-layer counts of encoded concepts aligned to each human concept. Each
/// encoded concept counts once, toward the tag with maximal overlap (ties by
/// tag name ascending), and only if that overlap reaches theta.
struct HumanAlignment {
  std::vector<std::string> tags;                                   ///< all human concept names, sorted
  std::map<int, std::map<std::string, std::size_t>> counts;        ///< layer -> tag -> count
  std::map<int, std::size_t> eligible;                             ///< layer -> eligible encoded concepts
  double theta = kDefaultTheta;

  [[nodiscard]] std::size_t aligned(int layer) const;
  /// 100 * aligned concepts across layers / eligible concepts across layers.
  [[nodiscard]] double percent_aligned() const;
};

HumanAlignment human_alignment_counts(const LayeredInventories& encoded, const ConceptInventory& human,
                                      double theta = kDefaultTheta);

/// Table-1 style summary row.
struct AlignmentSummary {
  std::string model;
  std::string task;
  std::string concept_set;
  double percent_aligned = 0.0;
};

void write_layer_matrix_csv(const std::filesystem::path& path, const LayerMatrix& matrix,
                            const Provenance& provenance = {});
void write_layer_matrix_json(const std::filesystem::path& path, const LayerMatrix& matrix,
                             const Provenance& provenance = {});
void write_human_counts_csv(const std::filesystem::path& path, const HumanAlignment& alignment,
                            const Provenance& provenance = {});
void write_summary_json(const std::filesystem::path& path, std::span<const AlignmentSummary> rows,
                        const Provenance& provenance = {});

/// Formats a percentage with one decimal place.
std::string format_percent(double value);

}  // namespace conceptlens

#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "conceptlens/embedding_layer.hpp"
#include "conceptlens/embedding_store.hpp"
#include "conceptlens/provenance.hpp"

namespace conceptlens {

enum class ConceptKind { kEncoded, kHuman, kTask };

std::string_view to_string(ConceptKind kind) noexcept;
ConceptKind parse_concept_kind(std::string_view text);

/// Identifies a concept within an inventory. Encoded concepts carry the
/// layer they were discovered in; human and task concepts do not.
///
/// Text form is `source:layerNN:name` for encoded concepts and
/// `source:name` otherwise, e.g. `bert-sst:layer10:c227`, `pos:JJR`.
struct ConceptId {
  std::string source;
  std::optional<int> layer;
  std::string name;

  [[nodiscard]] std::string str() const;
  static ConceptId parse(std::string_view text);

  bool operator==(const ConceptId&) const = default;
};

/// Orders by source, layer, then name with digit runs compared numerically
/// so that c2 sorts before c10.
std::strong_ordering compare(const ConceptId& a, const ConceptId& b);
inline bool operator<(const ConceptId& a, const ConceptId& b) { return compare(a, b) < 0; }

/// Natural string order: digit runs compare by numeric value.
int natural_compare(std::string_view a, std::string_view b);

class Concept {
 public:
  /// Members are deduplicated and sorted. `tokens` is indexed by global index
  /// and supplies surface forms for `word_types`.
  Concept(ConceptId id, ConceptKind kind, std::vector<InstanceId> members, std::span<const TokenInstance> tokens);

  /// For concepts whose surface forms are supplied directly.
  Concept(ConceptId id, ConceptKind kind, std::vector<InstanceId> members, std::vector<std::string> word_types);

  [[nodiscard]] const ConceptId& id() const noexcept { return id_; }
  [[nodiscard]] ConceptKind kind() const noexcept { return kind_; }
  [[nodiscard]] std::span<const InstanceId> members() const noexcept { return members_; }
  [[nodiscard]] std::size_t size() const noexcept { return members_.size(); }
  /// Distinct surface forms, sorted.
  [[nodiscard]] std::span<const std::string> word_types() const noexcept { return word_types_; }

 private:
  ConceptId id_;
  ConceptKind kind_;
  std::vector<InstanceId> members_;
  std::vector<std::string> word_types_;
};

/// An ordered collection of concepts with unique ids plus the facts needed
/// to decide whether two inventories share an instance space.
class ConceptInventory {
 public:
  ConceptInventory() = default;
  ConceptInventory(std::size_t instance_count, std::string instance_space_hash)
      : instance_count_(instance_count), instance_space_hash_(std::move(instance_space_hash)) {}

  void add(Concept c);

  [[nodiscard]] std::span<const Concept> concepts() const noexcept { return concepts_; }
  [[nodiscard]] std::size_t size() const noexcept { return concepts_.size(); }
  [[nodiscard]] bool empty() const noexcept { return concepts_.empty(); }
  [[nodiscard]] const Concept& operator[](std::size_t i) const { return concepts_[i]; }
  [[nodiscard]] const Concept* find(const ConceptId& id) const;

  [[nodiscard]] std::size_t instance_count() const noexcept { return instance_count_; }
  [[nodiscard]] const std::string& instance_space_hash() const noexcept { return instance_space_hash_; }
  void set_instance_space(std::size_t count, std::string hash) {
    instance_count_ = count;
    instance_space_hash_ = std::move(hash);
  }

  /// Free-form provenance parameters (K, theta, dataset hash, ...).
  std::map<std::string, std::string> parameters;

 private:
  std::vector<Concept> concepts_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t instance_count_ = 0;
  std::string instance_space_hash_;
};

/// One concept per distinct tag; members are the instances carrying it.
ConceptInventory build_human_concepts(const Dataset& dataset, const AnnotationSet& annotations);

/// One concept per label with at least one exclusive word type. A word type
/// belongs to C(label) iff every sentence containing it carries that label;
/// members are all instances of those word types.
ConceptInventory build_task_concepts(const Dataset& dataset, std::span<const std::string> label_set,
                                     const std::string& source = "task");

/// Keeps concepts with strictly more than `min_word_types` word types.
ConceptInventory filter_eligible(const ConceptInventory& inventory, std::size_t min_word_types = 5);

/// `concepts_{source}[_layer{NN}].jsonl`
std::string inventory_file_name(const std::string& source, std::optional<int> layer = {});

/// Writes a provenance header line (which also records the instance space
/// and parameters) followed by one concept per line.
void write_inventory(const std::filesystem::path& path, const ConceptInventory& inventory,
                     const Provenance& provenance = {});

/// Reads an inventory; surfaces for `word_types` come from `tokens`.
ConceptInventory read_inventory(const std::filesystem::path& path, std::span<const TokenInstance> tokens);

}  // namespace conceptlens

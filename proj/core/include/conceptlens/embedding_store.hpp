#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "conceptlens/embedding_layer.hpp"
#include "conceptlens/error.hpp"

namespace conceptlens {

struct TokenInstance {
  InstanceId global_index = 0;
  std::uint32_t sentence_index = 0;
  std::uint32_t token_index = 0;
  std::string surface;

  bool operator==(const TokenInstance&) const = default;
};

struct Sentence {
  std::uint32_t sentence_index = 0;
  std::string text;
  std::optional<std::string> label;

  bool operator==(const Sentence&) const = default;
};

/// One tag per token, indexed by global index. A missing tag is stored as
/// the empty string and reported by validation.
struct AnnotationSet {
  std::string task_name;
  std::vector<std::string> tags;
  /// Sentences in the tags file that carried more tags than tokens or that
  /// do not exist in the dataset: (sentence_index, tag count).
  std::vector<std::pair<std::uint32_t, std::size_t>> excess;
};

struct Finding {
  ErrorCode code;
  std::string location;
  std::string message;
};

struct ValidationReport {
  std::vector<Finding> findings;

  [[nodiscard]] bool ok() const noexcept { return findings.empty(); }
};

struct LayerInfo {
  int layer_id = 0;
  std::filesystem::path path;
  std::uint32_t dim = 0;
  std::uint64_t count = 0;
};

struct LoadOptions {
  /// Run full validation during load and throw on the first finding.
  bool strict = true;
  /// Declared label set; when non-empty, sentence labels must belong to it.
  std::vector<std::string> label_set;
};

/// Immutable view over an on-disk dump. Layer matrices are read on demand
/// so only one needs to be resident at a time.
class Dataset {
 public:
  Dataset(std::filesystem::path root, std::vector<TokenInstance> tokens, std::vector<Sentence> sentences,
          std::vector<LayerInfo> layers, std::map<std::string, AnnotationSet> annotations,
          std::vector<std::string> label_set = {});

  [[nodiscard]] const std::filesystem::path& root() const noexcept { return root_; }
  [[nodiscard]] std::size_t size() const noexcept { return tokens_.size(); }
  [[nodiscard]] std::size_t layer_count() const noexcept { return layers_.size(); }
  /// Dimension of the first layer (0 if there are none).
  [[nodiscard]] std::size_t dim() const noexcept;
  [[nodiscard]] std::span<const TokenInstance> tokens() const noexcept { return tokens_; }
  [[nodiscard]] std::span<const Sentence> sentences() const noexcept { return sentences_; }
  [[nodiscard]] std::span<const LayerInfo> layers() const noexcept { return layers_; }
  [[nodiscard]] const std::map<std::string, AnnotationSet>& annotations() const noexcept { return annotations_; }
  [[nodiscard]] const std::vector<std::string>& label_set() const noexcept { return label_set_; }

  [[nodiscard]] std::vector<int> layer_ids() const;
  [[nodiscard]] bool has_layer(int layer_id) const noexcept;
  [[nodiscard]] const LayerInfo& layer_info(int layer_id) const;

  /// Surface form of an instance; requires a valid dataset (dense indices).
  [[nodiscard]] const std::string& surface(InstanceId i) const { return tokens_[i].surface; }
  [[nodiscard]] const Sentence* find_sentence(std::uint32_t sentence_index) const noexcept;

  [[nodiscard]] std::shared_ptr<const EmbeddingLayer> load_layer(int layer_id, bool require_finite = true) const;
  [[nodiscard]] const AnnotationSet& annotation(const std::string& task) const;

 private:
  std::filesystem::path root_;
  std::vector<TokenInstance> tokens_;
  std::vector<Sentence> sentences_;
  std::vector<LayerInfo> layers_;
  std::map<std::string, AnnotationSet> annotations_;
  std::vector<std::string> label_set_;
  std::map<std::uint32_t, std::size_t> sentence_pos_;
};

Dataset load_dataset(const std::filesystem::path& root, const LoadOptions& options = {});

ValidationReport validate_dataset(const Dataset& dataset);

/// Clustering input: a subset of instances of one layer in ascending
/// global-index order. Shares the layer matrix, does not copy rows.
class InstanceView {
 public:
  InstanceView(std::shared_ptr<const EmbeddingLayer> layer, std::vector<InstanceId> indices);

  [[nodiscard]] int layer_id() const noexcept { return layer_->layer_id(); }
  [[nodiscard]] std::size_t size() const noexcept { return indices_.size(); }
  [[nodiscard]] std::size_t dim() const noexcept { return layer_->dim(); }
  [[nodiscard]] InstanceId global_index(std::size_t k) const noexcept { return indices_[k]; }
  [[nodiscard]] std::span<const InstanceId> indices() const noexcept { return indices_; }
  [[nodiscard]] std::span<const float> vector(std::size_t k) const noexcept { return layer_->row(indices_[k]); }

 private:
  std::shared_ptr<const EmbeddingLayer> layer_;
  std::vector<InstanceId> indices_;
};

/// Selects clustering instances. With `max_per_type`, keeps at most that many
/// instances per surface form, lowest global indices first.
InstanceView select_instances(const Dataset& dataset, int layer_id, std::optional<std::size_t> max_per_type = {});

/// Same selection over an already loaded layer.
InstanceView select_instances(const Dataset& dataset, std::shared_ptr<const EmbeddingLayer> layer,
                              std::optional<std::size_t> max_per_type = {});

// Sidecar writers, used by fixture generators and tests.
void write_tokens(const std::filesystem::path& path, std::span<const TokenInstance> tokens);
void write_sentences(const std::filesystem::path& path, std::span<const Sentence> sentences);
/// Writes `tags_{task}.jsonl` from per-token tags aligned with `tokens`.
void write_tags(const std::filesystem::path& path, std::span<const TokenInstance> tokens,
                std::span<const std::string> tags);

}  // namespace conceptlens

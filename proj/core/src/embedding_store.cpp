#include "conceptlens/embedding_store.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>
#include <utility>

#include "conceptlens/layer_file.hpp"
#include "jsonl.hpp"

namespace conceptlens {

namespace {

using detail::json;

constexpr std::size_t kMaxNonFiniteFindingsPerLayer = 20;

std::vector<TokenInstance> read_tokens(const std::filesystem::path& path) {
  std::vector<TokenInstance> tokens;
  detail::for_each_jsonl(path, [&](const json& obj, std::size_t) {
    TokenInstance tok;
    tok.global_index = obj.at("i").get<InstanceId>();
    tok.sentence_index = obj.at("s").get<std::uint32_t>();
    tok.token_index = obj.at("t").get<std::uint32_t>();
    tok.surface = obj.at("w").get<std::string>();
    tokens.push_back(std::move(tok));
  });
  return tokens;
}

std::vector<Sentence> read_sentences(const std::filesystem::path& path) {
  std::vector<Sentence> sentences;
  detail::for_each_jsonl(path, [&](const json& obj, std::size_t) {
    Sentence s;
    s.sentence_index = obj.at("s").get<std::uint32_t>();
    s.text = obj.value("text", std::string{});
    if (auto it = obj.find("label"); it != obj.end() && !it->is_null()) {
      s.label = it->get<std::string>();
    }
    sentences.push_back(std::move(s));
  });
  return sentences;
}

/// Global indices of each sentence's tokens ordered by token position.
std::unordered_map<std::uint32_t, std::vector<InstanceId>> tokens_by_sentence(std::span<const TokenInstance> tokens) {
  std::unordered_map<std::uint32_t, std::vector<std::pair<std::uint32_t, InstanceId>>> tmp;
  for (const auto& tok : tokens) tmp[tok.sentence_index].emplace_back(tok.token_index, tok.global_index);
  std::unordered_map<std::uint32_t, std::vector<InstanceId>> out;
  for (auto& [s, list] : tmp) {
    std::sort(list.begin(), list.end());
    auto& ids = out[s];
    ids.reserve(list.size());
    for (const auto& p : list) ids.push_back(p.second);
  }
  return out;
}

AnnotationSet read_tags(const std::filesystem::path& path, const std::string& task, std::span<const TokenInstance> tokens) {
  AnnotationSet set;
  set.task_name = task;
  set.tags.assign(tokens.size(), std::string{});
  const auto by_sentence = tokens_by_sentence(tokens);
  detail::for_each_jsonl(path, [&](const json& obj, std::size_t) {
    const auto s = obj.at("s").get<std::uint32_t>();
    const auto tags = obj.at("tags").get<std::vector<std::string>>();
    auto it = by_sentence.find(s);
    if (it == by_sentence.end()) {
      set.excess.emplace_back(s, tags.size());
      return;
    }
    const auto& ids = it->second;
    for (std::size_t k = 0; k < std::min(ids.size(), tags.size()); ++k) {
      if (ids[k] < set.tags.size()) set.tags[ids[k]] = tags[k];
    }
    if (tags.size() > ids.size()) set.excess.emplace_back(s, tags.size());
  });
  return set;
}

std::string layer_location(const LayerInfo& info) { return "layer " + std::to_string(info.layer_id); }

}  // namespace

Dataset::Dataset(std::filesystem::path root, std::vector<TokenInstance> tokens, std::vector<Sentence> sentences,
                 std::vector<LayerInfo> layers, std::map<std::string, AnnotationSet> annotations,
                 std::vector<std::string> label_set)
    : root_(std::move(root)),
      tokens_(std::move(tokens)),
      sentences_(std::move(sentences)),
      layers_(std::move(layers)),
      annotations_(std::move(annotations)),
      label_set_(std::move(label_set)) {
  std::stable_sort(tokens_.begin(), tokens_.end(),
                   [](const TokenInstance& a, const TokenInstance& b) { return a.global_index < b.global_index; });
  std::stable_sort(layers_.begin(), layers_.end(),
                   [](const LayerInfo& a, const LayerInfo& b) { return a.layer_id < b.layer_id; });
  for (std::size_t i = 0; i < sentences_.size(); ++i) sentence_pos_.emplace(sentences_[i].sentence_index, i);
}

std::size_t Dataset::dim() const noexcept { return layers_.empty() ? 0 : layers_.front().dim; }

std::vector<int> Dataset::layer_ids() const {
  std::vector<int> ids;
  ids.reserve(layers_.size());
  for (const auto& l : layers_) ids.push_back(l.layer_id);
  return ids;
}

bool Dataset::has_layer(int layer_id) const noexcept {
  return std::any_of(layers_.begin(), layers_.end(), [&](const LayerInfo& l) { return l.layer_id == layer_id; });
}

const LayerInfo& Dataset::layer_info(int layer_id) const {
  for (const auto& l : layers_) {
    if (l.layer_id == layer_id) return l;
  }
  throw Error(ErrorCode::kUnknownLayer, "layer " + std::to_string(layer_id) + " not in " + root_.string());
}

const Sentence* Dataset::find_sentence(std::uint32_t sentence_index) const noexcept {
  auto it = sentence_pos_.find(sentence_index);
  return it == sentence_pos_.end() ? nullptr : &sentences_[it->second];
}

std::shared_ptr<const EmbeddingLayer> Dataset::load_layer(int layer_id, bool require_finite) const {
  const LayerInfo& info = layer_info(layer_id);
  auto layer = std::make_shared<const EmbeddingLayer>(read_layer(info.path, layer_id, require_finite));
  if (layer->rows() != tokens_.size()) {
    throw Error(ErrorCode::kHeaderMismatch, info.path.string() + ": " + std::to_string(layer->rows()) +
                                                " rows but dataset has " + std::to_string(tokens_.size()) + " tokens");
  }
  return layer;
}

const AnnotationSet& Dataset::annotation(const std::string& task) const {
  auto it = annotations_.find(task);
  if (it == annotations_.end()) {
    throw Error(ErrorCode::kMissingFile, "tags_" + task + ".jsonl not found in " + root_.string());
  }
  return it->second;
}

Dataset load_dataset(const std::filesystem::path& root, const LoadOptions& options) {
  if (!std::filesystem::is_directory(root)) {
    throw Error(ErrorCode::kMissingFile, root.string() + " is not a directory");
  }
  const auto tokens_path = root / "tokens.jsonl";
  const auto sentences_path = root / "sentences.jsonl";
  if (!std::filesystem::exists(tokens_path)) throw Error(ErrorCode::kMissingFile, tokens_path.string());
  if (!std::filesystem::exists(sentences_path)) throw Error(ErrorCode::kMissingFile, sentences_path.string());

  auto tokens = read_tokens(tokens_path);
  auto sentences = read_sentences(sentences_path);

  std::vector<LayerInfo> layers;
  std::vector<std::pair<std::string, std::filesystem::path>> tag_files;
  for (const auto& entry : std::filesystem::directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (int id = parse_layer_file_name(name); id >= 0) {
      const LayerHeader header = read_layer_header(entry.path());
      layers.push_back(LayerInfo{id, entry.path(), header.dim, header.count});
    } else if (name.starts_with("tags_") && name.ends_with(".jsonl")) {
      tag_files.emplace_back(name.substr(5, name.size() - 5 - 6), entry.path());
    }
  }
  if (layers.empty()) {
    throw Error(ErrorCode::kMissingFile, "no layer_NN.ecv files in " + root.string());
  }

  // Annotations are aligned in global-index order.
  std::vector<TokenInstance> sorted = tokens;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const TokenInstance& a, const TokenInstance& b) { return a.global_index < b.global_index; });
  std::map<std::string, AnnotationSet> annotations;
  for (const auto& [task, path] : tag_files) annotations.emplace(task, read_tags(path, task, sorted));

  Dataset dataset(root, std::move(tokens), std::move(sentences), std::move(layers), std::move(annotations),
                  options.label_set);
  if (options.strict) {
    const ValidationReport report = validate_dataset(dataset);
    if (!report.ok()) {
      const Finding& f = report.findings.front();
      throw Error(f.code, f.location + ": " + f.message);
    }
  }
  return dataset;
}

ValidationReport validate_dataset(const Dataset& dataset) {
  ValidationReport report;
  auto add = [&](ErrorCode code, std::string location, std::string message) {
    report.findings.push_back(Finding{code, std::move(location), std::move(message)});
  };

  const auto tokens = dataset.tokens();
  const std::size_t n = tokens.size();

  // Tokens arrive sorted by global index.
  std::set<std::pair<std::uint32_t, std::uint32_t>> positions;
  std::uint64_t next_expected = 0;
  bool gap_reported = false;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& tok = tokens[k];
    const std::string loc = "tokens.jsonl i=" + std::to_string(tok.global_index);
    if (k > 0 && tokens[k - 1].global_index == tok.global_index) {
      add(ErrorCode::kDuplicateInstance, loc, "global index repeated");
    } else {
      if (tok.global_index != next_expected && !gap_reported) {
        add(ErrorCode::kIndexGap, loc, "expected global index " + std::to_string(next_expected));
        gap_reported = true;
      }
      next_expected = std::uint64_t{tok.global_index} + 1;
    }
    if (!positions.emplace(tok.sentence_index, tok.token_index).second) {
      add(ErrorCode::kDuplicateInstance, loc,
          "(s=" + std::to_string(tok.sentence_index) + ", t=" + std::to_string(tok.token_index) + ") repeated");
    }
    if (tok.surface.empty()) add(ErrorCode::kEmptySurface, loc, "surface is empty");
    if (dataset.find_sentence(tok.sentence_index) == nullptr) {
      add(ErrorCode::kOrphanToken, loc, "sentence " + std::to_string(tok.sentence_index) + " not in sentences.jsonl");
    }
  }
  if (next_expected != n && !gap_reported) {
    add(ErrorCode::kIndexGap, "tokens.jsonl", "global indices do not cover 0.." + std::to_string(n - 1));
  }

  std::set<std::uint32_t> seen_sentences;
  for (const auto& s : dataset.sentences()) {
    const std::string loc = "sentences.jsonl s=" + std::to_string(s.sentence_index);
    if (!seen_sentences.insert(s.sentence_index).second) {
      add(ErrorCode::kDuplicateInstance, loc, "sentence index repeated");
    }
    const auto& labels = dataset.label_set();
    if (s.label && !labels.empty() && std::find(labels.begin(), labels.end(), *s.label) == labels.end()) {
      add(ErrorCode::kUnknownLabel, loc, "label '" + *s.label + "' not in declared label set");
    }
  }

  const std::size_t dim = dataset.dim();
  for (const auto& info : dataset.layers()) {
    const std::string loc = layer_location(info);
    if (info.count != n) {
      add(ErrorCode::kHeaderMismatch, loc,
          std::to_string(info.count) + " rows but tokens.jsonl has " + std::to_string(n) + " tokens");
      continue;
    }
    if (info.dim != dim) {
      add(ErrorCode::kHeaderMismatch, loc, "dim " + std::to_string(info.dim) + " differs from " + std::to_string(dim));
    }
    const EmbeddingLayer layer = read_layer(info.path, info.layer_id, false);
    std::size_t bad = 0;
    for (std::size_t r = 0; r < layer.rows(); ++r) {
      const auto row = layer.row(r);
      const auto it = std::find_if(row.begin(), row.end(), [](float v) { return !std::isfinite(v); });
      if (it == row.end()) continue;
      if (++bad <= kMaxNonFiniteFindingsPerLayer) {
        add(ErrorCode::kNonFiniteValue, loc + " row " + std::to_string(r),
            "non-finite value at col " + std::to_string(it - row.begin()));
      }
    }
    if (bad > kMaxNonFiniteFindingsPerLayer) {
      add(ErrorCode::kNonFiniteValue, loc, std::to_string(bad) + " rows contain non-finite values in total");
    }
  }

  for (const auto& [task, set] : dataset.annotations()) {
    const std::string loc = "tags_" + task + ".jsonl";
    for (std::size_t i = 0; i < set.tags.size(); ++i) {
      if (set.tags[i].empty()) {
        add(ErrorCode::kAnnotationMismatch, loc + " i=" + std::to_string(i),
            "task '" + task + "' has no tag for instance " + std::to_string(i));
      }
    }
    for (const auto& [s, count] : set.excess) {
      add(ErrorCode::kAnnotationMismatch, loc + " s=" + std::to_string(s),
          "task '" + task + "' has " + std::to_string(count) + " tags that do not match sentence tokens");
    }
  }
  return report;
}

InstanceView::InstanceView(std::shared_ptr<const EmbeddingLayer> layer, std::vector<InstanceId> indices)
    : layer_(std::move(layer)), indices_(std::move(indices)) {
  if (!layer_) throw Error(ErrorCode::kInvalidArgument, "null layer");
  for (InstanceId i : indices_) {
    if (i >= layer_->rows()) throw Error(ErrorCode::kInvalidArgument, "instance index out of range");
  }
}

InstanceView select_instances(const Dataset& dataset, int layer_id, std::optional<std::size_t> max_per_type) {
  if (!dataset.has_layer(layer_id)) {
    throw Error(ErrorCode::kUnknownLayer, "layer " + std::to_string(layer_id));
  }
  return select_instances(dataset, dataset.load_layer(layer_id), max_per_type);
}

InstanceView select_instances(const Dataset& dataset, std::shared_ptr<const EmbeddingLayer> layer,
                              std::optional<std::size_t> max_per_type) {
  if (max_per_type && *max_per_type == 0) {
    throw Error(ErrorCode::kInvalidArgument, "max_per_type must be at least 1");
  }
  if (layer->rows() != dataset.size()) {
    throw Error(ErrorCode::kHeaderMismatch, "layer rows do not match dataset size");
  }
  std::vector<InstanceId> indices;
  indices.reserve(dataset.size());
  if (!max_per_type) {
    for (std::size_t i = 0; i < dataset.size(); ++i) indices.push_back(static_cast<InstanceId>(i));
  } else {
    std::unordered_map<std::string_view, std::size_t> taken;
    for (const auto& tok : dataset.tokens()) {
      auto& count = taken[tok.surface];
      if (count < *max_per_type) {
        ++count;
        indices.push_back(tok.global_index);
      }
    }
  }
  return InstanceView(std::move(layer), std::move(indices));
}

void write_tokens(const std::filesystem::path& path, std::span<const TokenInstance> tokens) {
  auto out = detail::open_for_write(path);
  for (const auto& tok : tokens) {
    out << json{{"i", tok.global_index}, {"s", tok.sentence_index}, {"t", tok.token_index}, {"w", tok.surface}}.dump()
        << '\n';
  }
}

void write_sentences(const std::filesystem::path& path, std::span<const Sentence> sentences) {
  auto out = detail::open_for_write(path);
  for (const auto& s : sentences) {
    json obj{{"s", s.sentence_index}, {"text", s.text}};
    obj["label"] = s.label ? json(*s.label) : json(nullptr);
    out << obj.dump() << '\n';
  }
}

void write_tags(const std::filesystem::path& path, std::span<const TokenInstance> tokens,
                std::span<const std::string> tags) {
  if (tags.size() != tokens.size()) {
    throw Error(ErrorCode::kAnnotationMismatch, "tag count differs from token count");
  }
  std::map<std::uint32_t, std::vector<std::pair<std::uint32_t, std::size_t>>> by_sentence;
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    by_sentence[tokens[k].sentence_index].emplace_back(tokens[k].token_index, k);
  }
  auto out = detail::open_for_write(path);
  for (auto& [s, list] : by_sentence) {
    std::sort(list.begin(), list.end());
    json row_tags = json::array();
    for (const auto& [t, k] : list) row_tags.push_back(tags[k]);
    out << json{{"s", s}, {"tags", row_tags}}.dump() << '\n';
  }
}

}  // namespace conceptlens

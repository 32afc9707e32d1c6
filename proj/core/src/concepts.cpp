#include "conceptlens/concepts.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <map>

#include "jsonl.hpp"

namespace conceptlens {

using detail::json;

std::string_view to_string(ConceptKind kind) noexcept {
  switch (kind) {
    case ConceptKind::kEncoded: return "encoded";
    case ConceptKind::kHuman: return "human";
    case ConceptKind::kTask: return "task";
  }
  return "encoded";
}

ConceptKind parse_concept_kind(std::string_view text) {
  if (text == "encoded") return ConceptKind::kEncoded;
  if (text == "human") return ConceptKind::kHuman;
  if (text == "task") return ConceptKind::kTask;
  throw Error(ErrorCode::kMalformedInput, "unknown concept kind '" + std::string(text) + "'");
}

std::string ConceptId::str() const {
  if (!layer) return source + ":" + name;
  char buf[32];
  std::snprintf(buf, sizeof(buf), ":layer%02d:", *layer);
  return source + buf + name;
}

ConceptId ConceptId::parse(std::string_view text) {
  const auto first = text.find(':');
  if (first == std::string_view::npos || first == 0) {
    throw Error(ErrorCode::kMalformedInput, "concept id '" + std::string(text) + "' has no source");
  }
  ConceptId id;
  id.source = std::string(text.substr(0, first));
  std::string_view rest = text.substr(first + 1);
  const auto second = rest.find(':');
  if (second != std::string_view::npos && rest.starts_with("layer") && second > 5) {
    const std::string_view digits = rest.substr(5, second - 5);
    if (std::all_of(digits.begin(), digits.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      id.layer = std::stoi(std::string(digits));
      rest = rest.substr(second + 1);
    }
  }
  if (rest.empty()) {
    throw Error(ErrorCode::kMalformedInput, "concept id '" + std::string(text) + "' has no name");
  }
  id.name = std::string(rest);
  return id;
}

int natural_compare(std::string_view a, std::string_view b) {
  auto is_digit = [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; };
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    if (is_digit(a[i]) && is_digit(b[j])) {
      std::size_t ie = i;
      std::size_t je = j;
      while (ie < a.size() && is_digit(a[ie])) ++ie;
      while (je < b.size() && is_digit(b[je])) ++je;
      // Strip leading zeros, then longer run is larger.
      std::size_t is = i;
      std::size_t js = j;
      while (is + 1 < ie && a[is] == '0') ++is;
      while (js + 1 < je && b[js] == '0') ++js;
      if (ie - is != je - js) return ie - is < je - js ? -1 : 1;
      if (int c = a.substr(is, ie - is).compare(b.substr(js, je - js)); c != 0) return c < 0 ? -1 : 1;
      if (ie - i != je - j) return ie - i < je - j ? -1 : 1;
      i = ie;
      j = je;
    } else {
      if (a[i] != b[j]) return static_cast<unsigned char>(a[i]) < static_cast<unsigned char>(b[j]) ? -1 : 1;
      ++i;
      ++j;
    }
  }
  if (i == a.size() && j == b.size()) return 0;
  return i == a.size() ? -1 : 1;
}

std::strong_ordering compare(const ConceptId& a, const ConceptId& b) {
  if (auto c = a.source <=> b.source; c != 0) return c;
  if (auto c = a.layer <=> b.layer; c != 0) return c;
  if (int c = natural_compare(a.name, b.name); c != 0) return c < 0 ? std::strong_ordering::less : std::strong_ordering::greater;
  return a.name <=> b.name;
}

namespace {

std::vector<InstanceId> normalize_members(std::vector<InstanceId> members) {
  std::sort(members.begin(), members.end());
  members.erase(std::unique(members.begin(), members.end()), members.end());
  return members;
}

}  // namespace

Concept::Concept(ConceptId id, ConceptKind kind, std::vector<InstanceId> members, std::span<const TokenInstance> tokens)
    : id_(std::move(id)), kind_(kind), members_(normalize_members(std::move(members))) {
  if (members_.empty()) {
    throw Error(ErrorCode::kEmptyConcept, id_.str() + " has no members");
  }
  for (InstanceId m : members_) {
    if (m >= tokens.size()) {
      throw Error(ErrorCode::kInvalidArgument, id_.str() + ": member " + std::to_string(m) + " out of range");
    }
    word_types_.push_back(tokens[m].surface);
  }
  std::sort(word_types_.begin(), word_types_.end());
  word_types_.erase(std::unique(word_types_.begin(), word_types_.end()), word_types_.end());
}

Concept::Concept(ConceptId id, ConceptKind kind, std::vector<InstanceId> members, std::vector<std::string> word_types)
    : id_(std::move(id)),
      kind_(kind),
      members_(normalize_members(std::move(members))),
      word_types_(std::move(word_types)) {
  if (members_.empty()) {
    throw Error(ErrorCode::kEmptyConcept, id_.str() + " has no members");
  }
  std::sort(word_types_.begin(), word_types_.end());
  word_types_.erase(std::unique(word_types_.begin(), word_types_.end()), word_types_.end());
  if (word_types_.empty() || word_types_.size() > members_.size()) {
    throw Error(ErrorCode::kInvalidArgument, id_.str() + ": word type count must be in [1, |members|]");
  }
}

void ConceptInventory::add(Concept c) {
  std::string key = c.id().str();
  if (index_.contains(key)) {
    throw Error(ErrorCode::kInvalidArgument, "duplicate c id " + key);
  }
  index_.emplace(std::move(key), concepts_.size());
  concepts_.push_back(std::move(c));
}

const Concept* ConceptInventory::find(const ConceptId& id) const {
  auto it = index_.find(id.str());
  return it == index_.end() ? nullptr : &concepts_[it->second];
}

ConceptInventory build_human_concepts(const Dataset& dataset, const AnnotationSet& annotations) {
  if (annotations.tags.empty()) {
    throw Error(ErrorCode::kEmptyAnnotationSet, "task '" + annotations.task_name + "' has no tags");
  }
  if (annotations.tags.size() != dataset.size()) {
    throw Error(ErrorCode::kAnnotationMismatch, "task '" + annotations.task_name + "' has " +
                                                    std::to_string(annotations.tags.size()) + " tags for " +
                                                    std::to_string(dataset.size()) + " instances");
  }
  std::map<std::string, std::vector<InstanceId>> by_tag;
  for (std::size_t i = 0; i < annotations.tags.size(); ++i) {
    if (annotations.tags[i].empty()) {
      throw Error(ErrorCode::kAnnotationMismatch,
                  "task '" + annotations.task_name + "' has no tag for instance " + std::to_string(i));
    }
    by_tag[annotations.tags[i]].push_back(static_cast<InstanceId>(i));
  }
  ConceptInventory inventory(dataset.size(), instance_space_hash(dataset));
  for (auto& [tag, members] : by_tag) {
    inventory.add(Concept(ConceptId{annotations.task_name, std::nullopt, tag}, ConceptKind::kHuman, std::move(members),
                          dataset.tokens()));
  }
  inventory.parameters["task"] = annotations.task_name;
  return inventory;
}

ConceptInventory build_task_concepts(const Dataset& dataset, std::span<const std::string> label_set,
                                     const std::string& source) {
  if (label_set.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "label set is empty");
  }
  std::map<std::uint32_t, int> sentence_label;
  for (const auto& s : dataset.sentences()) {
    if (!s.label) {
      throw Error(ErrorCode::kUnlabeledSentence, "sentence " + std::to_string(s.sentence_index) + " has no label");
    }
    const auto it = std::find(label_set.begin(), label_set.end(), *s.label);
    if (it == label_set.end()) {
      throw Error(ErrorCode::kUnknownLabel,
                  "sentence " + std::to_string(s.sentence_index) + " label '" + *s.label + "' not in label set");
    }
    sentence_label[s.sentence_index] = static_cast<int>(it - label_set.begin());
  }

  // -1 unseen, -2 seen under several labels, otherwise the single label index.
  constexpr int kMixed = -2;
  std::unordered_map<std::string_view, int> type_label;
  for (const auto& tok : dataset.tokens()) {
    const auto it = sentence_label.find(tok.sentence_index);
    if (it == sentence_label.end()) {
      throw Error(ErrorCode::kUnlabeledSentence, "token " + std::to_string(tok.global_index) + " refers to sentence " +
                                                     std::to_string(tok.sentence_index) + " which has no label");
    }
    auto [slot, inserted] = type_label.try_emplace(tok.surface, it->second);
    if (!inserted && slot->second != it->second) slot->second = kMixed;
  }

  std::vector<std::vector<InstanceId>> members(label_set.size());
  for (const auto& tok : dataset.tokens()) {
    const int label = type_label.at(tok.surface);
    if (label >= 0) members[static_cast<std::size_t>(label)].push_back(tok.global_index);
  }

  ConceptInventory inventory(dataset.size(), instance_space_hash(dataset));
  for (std::size_t k = 0; k < label_set.size(); ++k) {
    if (members[k].empty()) continue;
    inventory.add(Concept(ConceptId{source, std::nullopt, label_set[k]}, ConceptKind::kTask, std::move(members[k]),
                          dataset.tokens()));
  }
  std::string labels;
  for (const auto& l : label_set) labels += (labels.empty() ? "" : ",") + l;
  inventory.parameters["labels"] = labels;
  return inventory;
}

ConceptInventory filter_eligible(const ConceptInventory& inventory, std::size_t min_word_types) {
  ConceptInventory out(inventory.instance_count(), inventory.instance_space_hash());
  out.parameters = inventory.parameters;
  out.parameters["min_word_types"] = std::to_string(min_word_types);
  for (const auto& c : inventory.concepts()) {
    if (c.word_types().size() > min_word_types) out.add(c);
  }
  return out;
}

std::string inventory_file_name(const std::string& source, std::optional<int> layer) {
  if (!layer) return "concepts_" + source + ".jsonl";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "_layer%02d.jsonl", *layer);
  return "concepts_" + source + buf;
}

void write_inventory(const std::filesystem::path& path, const ConceptInventory& inventory,
                     const Provenance& provenance) {
  auto out = detail::open_for_write(path);
  json header = json::parse(provenance.json_line());
  header["provenance"]["instance_count"] = inventory.instance_count();
  header["provenance"]["instance_space_hash"] = inventory.instance_space_hash();
  header["provenance"]["parameters"] = inventory.parameters;
  out << header.dump() << '\n';
  for (const auto& c : inventory.concepts()) {
    json members = json::array();
    for (InstanceId m : c.members()) members.push_back(m);
    out << json{{"id", c.id().str()}, {"kind", to_string(c.kind())}, {"members", std::move(members)}}.dump() << '\n';
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

ConceptInventory read_inventory(const std::filesystem::path& path, std::span<const TokenInstance> tokens) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::kMissingUpstreamArtifact, path.string());
  }
  ConceptInventory inventory;
  detail::for_each_jsonl(
      path,
      [&](const json& obj, std::size_t) {
        inventory.add(Concept(ConceptId::parse(obj.at("id").get<std::string>()),
                              parse_concept_kind(obj.at("kind").get<std::string>()),
                              obj.at("members").get<std::vector<InstanceId>>(), tokens));
      },
      [&](const json& header) {
        inventory.set_instance_space(header.value("instance_count", std::size_t{0}),
                                     header.value("instance_space_hash", std::string{}));
        if (auto it = header.find("parameters"); it != header.end()) {
          inventory.parameters = it->get<std::map<std::string, std::string>>();
        }
      });
  return inventory;
}

}  // namespace conceptlens

#include "conceptlens/polarity.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "csv.hpp"
#include "jsonl.hpp"

namespace conceptlens {

using detail::json;

namespace {

double word_type_overlap(const Concept& c, const Concept* task_concept) {
  if (task_concept == nullptr) return 0.0;
  const auto types = c.word_types();
  const auto task_types = task_concept->word_types();
  std::size_t shared = 0;
  for (const auto& w : types) {
    if (std::binary_search(task_types.begin(), task_types.end(), w)) ++shared;
  }
  return static_cast<double>(shared) / static_cast<double>(types.size());
}

PolarityVerdict verdict_from_overlaps(const ConceptId& id, std::map<std::string, double> overlaps, double theta) {
  PolarityVerdict v{id, std::string(kNeutral), std::move(overlaps)};
  const std::string* best = nullptr;
  double best_value = -1.0;
  // std::map iterates class names ascending, so the first maximum wins ties.
  for (const auto& [cls, value] : v.overlap_by_class) {
    if (value >= theta && value > best_value) {
      best = &cls;
      best_value = value;
    }
  }
  if (best != nullptr) v.label = *best;
  return v;
}

}  // namespace

std::vector<std::string> task_classes(const ConceptInventory& task_inventory) {
  std::vector<std::string> classes;
  if (auto it = task_inventory.parameters.find("labels"); it != task_inventory.parameters.end()) {
    std::stringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) classes.push_back(item);
    }
  }
  if (classes.empty()) {
    for (const auto& c : task_inventory.concepts()) classes.push_back(c.id().name);
  }
  return classes;
}

PolarityVerdict classify_concept(const Concept& c, const ConceptInventory& task_inventory, double theta,
                                 PolarityMode mode) {
  check_theta(theta);
  std::map<std::string, double> overlaps;
  for (const auto& cls : task_classes(task_inventory)) {
    const Concept* task_concept = nullptr;
    for (const auto& t : task_inventory.concepts()) {
      if (t.id().name == cls) task_concept = &t;
    }
    overlaps[cls] = mode == PolarityMode::kInstance ? (task_concept ? overlap(c, *task_concept) : 0.0)
                                                    : word_type_overlap(c, task_concept);
  }
  return verdict_from_overlaps(c.id(), std::move(overlaps), theta);
}

LayeredVerdicts classify_layers(const LayeredInventories& encoded, const ConceptInventory& task_inventory, double theta,
                                PolarityMode mode) {
  check_theta(theta);
  const auto classes = task_classes(task_inventory);
  LayeredVerdicts out;
  if (mode == PolarityMode::kWordType) {
    for (const auto& [layer, inv] : encoded) {
      auto& list = out[layer];
      for (const auto& c : inv.concepts()) list.push_back(classify_concept(c, task_inventory, theta, mode));
    }
    return out;
  }
  const OverlapIndex index(task_inventory);
  for (const auto& [layer, inv] : encoded) {
    if (inv.instance_count() != 0 && task_inventory.instance_count() != 0 &&
        inv.instance_count() != task_inventory.instance_count()) {
      throw Error(ErrorCode::kInstanceSpaceMismatch, "layer " + std::to_string(layer) + " and task inventory differ");
    }
    auto& list = out[layer];
    list.reserve(inv.size());
    for (const auto& c : inv.concepts()) {
      const auto ov = index.overlaps(c);
      std::map<std::string, double> overlaps;
      for (const auto& cls : classes) overlaps[cls] = 0.0;
      for (std::size_t k = 0; k < ov.size(); ++k) overlaps[task_inventory[k].id().name] = ov[k];
      list.push_back(verdict_from_overlaps(c.id(), std::move(overlaps), theta));
    }
  }
  return out;
}

PolarityCounts polarity_counts(const LayeredVerdicts& verdicts, std::span<const std::string> classes) {
  PolarityCounts out;
  out.classes.assign(classes.begin(), classes.end());
  out.classes.emplace_back(kNeutral);
  for (const auto& [layer, list] : verdicts) {
    auto& per_class = out.counts[layer];
    for (const auto& cls : out.classes) per_class[cls] = 0;
    for (const auto& v : list) ++per_class[v.label];
    out.eligible[layer] = list.size();
  }
  return out;
}

PolarityCounts polarity_counts(const LayeredInventories& encoded, const ConceptInventory& task_inventory, double theta,
                               PolarityMode mode) {
  const auto classes = task_classes(task_inventory);
  return polarity_counts(classify_layers(encoded, task_inventory, theta, mode), classes);
}

std::string polarity_file_name(int layer) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "polarity_layer%02d.jsonl", layer);
  return buf;
}

void write_polarity_jsonl(const std::filesystem::path& path, std::span<const PolarityVerdict> verdicts,
                          const Provenance& provenance) {
  auto out = detail::open_for_write(path);
  out << provenance.json_line() << '\n';
  for (const auto& v : verdicts) {
    json overlaps = json::object();
    for (const auto& [cls, value] : v.overlap_by_class) overlaps[cls] = value;
    out << json{{"id", v.concept_id.str()}, {"label", v.label}, {"overlaps", std::move(overlaps)}}.dump() << '\n';
  }
}

std::vector<PolarityVerdict> read_polarity_jsonl(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::kMissingUpstreamArtifact, path.string());
  }
  std::vector<PolarityVerdict> out;
  detail::for_each_jsonl(path, [&](const json& obj, std::size_t) {
    PolarityVerdict v;
    v.concept_id = ConceptId::parse(obj.at("id").get<std::string>());
    v.label = obj.at("label").get<std::string>();
    v.overlap_by_class = obj.at("overlaps").get<std::map<std::string, double>>();
    out.push_back(std::move(v));
  });
  return out;
}

void write_polarity_summary_csv(const std::filesystem::path& path, const PolarityCounts& counts,
                                const Provenance& provenance) {
  auto out = detail::open_for_write(path);
  out << provenance.csv_comment() << '\n';
  out << "layer,eligible";
  for (const auto& cls : counts.classes) out << ',' << detail::csv_field(cls);
  out << '\n';
  for (const auto& [layer, per_class] : counts.counts) {
    out << layer << ',' << counts.eligible.at(layer);
    for (const auto& cls : counts.classes) out << ',' << per_class.at(cls);
    out << '\n';
  }
}

}  // namespace conceptlens

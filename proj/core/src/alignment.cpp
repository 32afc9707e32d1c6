#include "conceptlens/alignment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <optional>

#include "csv.hpp"
#include "jsonl.hpp"

namespace conceptlens {

using detail::json;

void check_theta(double theta) {
  if (!(theta > 0.0 && theta <= 1.0)) {
    throw Error(ErrorCode::kThetaOutOfRange, "theta=" + std::to_string(theta) + " not in (0, 1]");
  }
}

double overlap(const Concept& c1, const Concept& c2) {
  if (c1.size() == 0) {
    throw Error(ErrorCode::kEmptyConcept, c1.id().str());
  }
  const auto a = c1.members();
  const auto b = c2.members();
  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t shared = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      ++shared;
      ++i;
      ++j;
    }
  }
  return static_cast<double>(shared) / static_cast<double>(a.size());
}

double overlap_by_surface(const Concept& c1, std::span<const TokenInstance> c1_tokens, const Concept& c2) {
  if (c1.size() == 0) {
    throw Error(ErrorCode::kEmptyConcept, c1.id().str());
  }
  const auto types = c2.word_types();
  std::size_t shared = 0;
  for (InstanceId m : c1.members()) {
    if (m >= c1_tokens.size()) throw Error(ErrorCode::kInvalidArgument, "member outside token table");
    if (std::binary_search(types.begin(), types.end(), c1_tokens[m].surface)) ++shared;
  }
  return static_cast<double>(shared) / static_cast<double>(c1.size());
}

AlignmentResult is_aligned(const Concept& c1, const Concept& c2, double theta) {
  check_theta(theta);
  const double value = overlap(c1, c2);
  return AlignmentResult{c1.id(), c2.id(), value, value >= theta, theta};
}

OverlapIndex::OverlapIndex(const ConceptInventory& targets, const MatchOptions& options)
    : targets_(&targets), options_(options) {
  if (options_.mode == MatchMode::kSurface) {
    for (std::size_t k = 0; k < targets.size(); ++k) {
      for (const auto& w : targets[k].word_types()) by_surface_[w].push_back(static_cast<std::uint32_t>(k));
    }
    return;
  }
  std::size_t limit = 0;
  for (const auto& c : targets.concepts()) {
    if (!c.members().empty()) limit = std::max<std::size_t>(limit, c.members().back() + 1);
  }
  offsets_.assign(limit + 1, 0);
  for (const auto& c : targets.concepts()) {
    for (InstanceId m : c.members()) ++offsets_[m + 1];
  }
  for (std::size_t i = 1; i < offsets_.size(); ++i) offsets_[i] += offsets_[i - 1];
  concept_ids_.resize(offsets_.back());
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (std::size_t k = 0; k < targets.size(); ++k) {
    for (InstanceId m : targets[k].members()) concept_ids_[fill[m]++] = static_cast<std::uint32_t>(k);
  }
}

std::vector<std::size_t> OverlapIndex::intersections(const Concept& c) const {
  std::vector<std::size_t> counts(targets_->size(), 0);
  if (options_.mode == MatchMode::kSurface) {
    for (InstanceId m : c.members()) {
      if (m >= options_.from_tokens.size()) throw Error(ErrorCode::kInvalidArgument, "member outside token table");
      auto it = by_surface_.find(options_.from_tokens[m].surface);
      if (it == by_surface_.end()) continue;
      for (auto k : it->second) ++counts[k];
    }
    return counts;
  }
  for (InstanceId m : c.members()) {
    if (m + 1 >= offsets_.size()) continue;
    for (std::size_t p = offsets_[m]; p < offsets_[m + 1]; ++p) ++counts[concept_ids_[p]];
  }
  return counts;
}

std::vector<double> OverlapIndex::overlaps(const Concept& c) const {
  if (c.size() == 0) throw Error(ErrorCode::kEmptyConcept, c.id().str());
  const auto counts = intersections(c);
  std::vector<double> out(counts.size());
  for (std::size_t k = 0; k < counts.size(); ++k) {
    out[k] = static_cast<double>(counts[k]) / static_cast<double>(c.size());
  }
  return out;
}

namespace {

void check_instance_spaces(const LayeredInventories& a, const LayeredInventories& b) {
  std::optional<std::size_t> count;
  for (const auto* side : {&a, &b}) {
    for (const auto& [layer, inv] : *side) {
      if (inv.instance_count() == 0) continue;
      if (!count) count = inv.instance_count();
      if (*count != inv.instance_count()) {
        throw Error(ErrorCode::kInstanceSpaceMismatch, "inventories cover " + std::to_string(*count) + " and " +
                                                           std::to_string(inv.instance_count()) + " instances");
      }
    }
  }
}

}  // namespace

LayerMatrix layer_pair_matrix(const LayeredInventories& fine_tuned, const LayeredInventories& base, double theta,
                              const MatchOptions& options) {
  check_theta(theta);
  if (options.mode == MatchMode::kInstance) check_instance_spaces(fine_tuned, base);
  LayerMatrix m;
  m.theta = theta;
  for (const auto& [layer, inv] : fine_tuned) m.rows.push_back(layer);
  for (const auto& [layer, inv] : base) m.cols.push_back(layer);
  m.cells.assign(m.rows.size() * m.cols.size(), 0.0);

  std::vector<OverlapIndex> indices;
  indices.reserve(base.size());
  for (const auto& [layer, inv] : base) indices.emplace_back(inv, options);

  std::size_t i = 0;
  for (const auto& [ft_layer, ft_inv] : fine_tuned) {
    m.row_eligible.push_back(ft_inv.size());
    m.empty_row.push_back(ft_inv.empty());
    if (!ft_inv.empty()) {
      std::vector<std::size_t> aligned(m.cols.size(), 0);
      for (const auto& c : ft_inv.concepts()) {
        for (std::size_t j = 0; j < indices.size(); ++j) {
          const auto ov = indices[j].overlaps(c);
          if (std::any_of(ov.begin(), ov.end(), [&](double v) { return v >= theta; })) ++aligned[j];
        }
      }
      for (std::size_t j = 0; j < m.cols.size(); ++j) {
        m.cells[i * m.cols.size() + j] =
            100.0 * static_cast<double>(aligned[j]) / static_cast<double>(ft_inv.size());
      }
    }
    ++i;
  }
  return m;
}

std::size_t HumanAlignment::aligned(int layer) const {
  std::size_t total = 0;
  if (auto it = counts.find(layer); it != counts.end()) {
    for (const auto& [tag, n] : it->second) total += n;
  }
  return total;
}

double HumanAlignment::percent_aligned() const {
  std::size_t aligned_total = 0;
  std::size_t eligible_total = 0;
  for (const auto& [layer, n] : eligible) {
    eligible_total += n;
    aligned_total += aligned(layer);
  }
  return eligible_total == 0 ? 0.0 : 100.0 * static_cast<double>(aligned_total) / static_cast<double>(eligible_total);
}

HumanAlignment human_alignment_counts(const LayeredInventories& encoded, const ConceptInventory& human, double theta) {
  check_theta(theta);
  HumanAlignment out;
  out.theta = theta;
  for (const auto& c : human.concepts()) out.tags.push_back(c.id().name);
  std::sort(out.tags.begin(), out.tags.end());

  const OverlapIndex index(human);
  for (const auto& [layer, inv] : encoded) {
    if (inv.instance_count() != 0 && human.instance_count() != 0 && inv.instance_count() != human.instance_count()) {
      throw Error(ErrorCode::kInstanceSpaceMismatch, "layer " + std::to_string(layer) + " and human inventory differ");
    }
    auto& per_tag = out.counts[layer];
    for (const auto& tag : out.tags) per_tag[tag] = 0;
    out.eligible[layer] = inv.size();
    for (const auto& c : inv.concepts()) {
      const auto ov = index.overlaps(c);
      std::size_t best = ov.size();
      for (std::size_t k = 0; k < ov.size(); ++k) {
        if (best == ov.size() || ov[k] > ov[best] ||
            (ov[k] == ov[best] && human[k].id().name < human[best].id().name)) {
          best = k;
        }
      }
      if (best < ov.size() && ov[best] >= theta) ++per_tag[human[best].id().name];
    }
  }
  return out;
}

std::string format_percent(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", value);
  return buf;
}

void write_layer_matrix_csv(const std::filesystem::path& path, const LayerMatrix& matrix,
                            const Provenance& provenance) {
  auto out = detail::open_for_write(path);
  out << provenance.csv_comment() << '\n';
  out << "# convention: " << kLayerMatrixConvention << "; theta=" << matrix.theta << '\n';
  out << "ft_layer";
  for (int c : matrix.cols) out << ',' << c;
  out << ",eligible,flag\n";
  for (std::size_t i = 0; i < matrix.rows.size(); ++i) {
    out << matrix.rows[i];
    for (std::size_t j = 0; j < matrix.cols.size(); ++j) out << ',' << format_percent(matrix.at(i, j));
    out << ',' << matrix.row_eligible[i] << ',' << (matrix.empty_row[i] ? "empty" : "") << '\n';
  }
}

void write_layer_matrix_json(const std::filesystem::path& path, const LayerMatrix& matrix,
                             const Provenance& provenance) {
  json cells = json::array();
  for (std::size_t i = 0; i < matrix.rows.size(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < matrix.cols.size(); ++j) row.push_back(matrix.at(i, j));
    cells.push_back(std::move(row));
  }
  json empty_rows = json::array();
  for (std::size_t i = 0; i < matrix.rows.size(); ++i) {
    if (matrix.empty_row[i]) empty_rows.push_back(matrix.rows[i]);
  }
  json doc = json::parse(provenance.json_line());
  doc["convention"] = kLayerMatrixConvention;
  doc["theta"] = matrix.theta;
  doc["rows"] = matrix.rows;
  doc["cols"] = matrix.cols;
  doc["cells"] = std::move(cells);
  doc["eligible"] = matrix.row_eligible;
  doc["empty_rows"] = std::move(empty_rows);
  auto out = detail::open_for_write(path);
  out << doc.dump(2) << '\n';
}

void write_human_counts_csv(const std::filesystem::path& path, const HumanAlignment& alignment,
                            const Provenance& provenance) {
  auto out = detail::open_for_write(path);
  out << provenance.csv_comment() << '\n';
  out << "layer,eligible,aligned,percent";
  for (const auto& tag : alignment.tags) out << ',' << detail::csv_field(tag);
  out << '\n';
  for (const auto& [layer, eligible] : alignment.eligible) {
    const std::size_t aligned = alignment.aligned(layer);
    const double pct = eligible == 0 ? 0.0 : 100.0 * static_cast<double>(aligned) / static_cast<double>(eligible);
    out << layer << ',' << eligible << ',' << aligned << ',' << format_percent(pct);
    const auto& per_tag = alignment.counts.at(layer);
    for (const auto& tag : alignment.tags) out << ',' << per_tag.at(tag);
    out << '\n';
  }
}

void write_summary_json(const std::filesystem::path& path, std::span<const AlignmentSummary> rows,
                        const Provenance& provenance) {
  json list = json::array();
  for (const auto& r : rows) {
    list.push_back(json{{"model", r.model},
                        {"task", r.task},
                        {"concept_set", r.concept_set},
                        {"percent_aligned", std::stod(format_percent(r.percent_aligned))}});
  }
  json doc = json::parse(provenance.json_line());
  doc["summary"] = std::move(list);
  auto out = detail::open_for_write(path);
  out << doc.dump(2) << '\n';
}

}  // namespace conceptlens

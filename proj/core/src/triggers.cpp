#include "conceptlens/triggers.hpp"

#include <algorithm>

#include "conceptlens/alignment.hpp"
#include "csv.hpp"
#include "jsonl.hpp"

namespace conceptlens {

using detail::json;

std::vector<TriggerCandidate> select_top_polarized(std::span<const PolarityVerdict> verdicts,
                                                   const ConceptInventory& inventory, const std::string& cls,
                                                   std::size_t k) {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be at least 1");
  if (cls == kNeutral) throw Error(ErrorCode::kInvalidArgument, "neutral is not a trigger class");
  std::vector<TriggerCandidate> out;
  for (const auto& v : verdicts) {
    if (v.label != cls) continue;
    const Concept* c = inventory.find(v.concept_id);
    if (c == nullptr) throw Error(ErrorCode::kMissingUpstreamArtifact, "verdict for unknown concept " + v.concept_id.str());
    auto it = v.overlap_by_class.find(cls);
    const double ov = it == v.overlap_by_class.end() ? 0.0 : it->second;
    out.push_back(TriggerCandidate{v.concept_id, cls, ov, {c->word_types().begin(), c->word_types().end()}});
  }
  std::sort(out.begin(), out.end(), [](const TriggerCandidate& a, const TriggerCandidate& b) {
    if (a.overlap != b.overlap) return a.overlap > b.overlap;
    if (a.trigger_words.size() != b.trigger_words.size()) return a.trigger_words.size() > b.trigger_words.size();
    return a.concept_id < b.concept_id;
  });
  if (out.size() > k) out.resize(k);
  return out;
}

std::map<std::string, std::vector<Sentence>> partition_by_prediction(std::span<const Sentence> sentences,
                                                                     PredictionProvider& provider) {
  std::vector<std::string> texts;
  texts.reserve(sentences.size());
  for (const auto& s : sentences) texts.push_back(s.text);
  const auto labels = provider.predict(texts);
  if (labels.size() != sentences.size()) {
    throw Error(ErrorCode::kProviderProtocolError, "provider returned " + std::to_string(labels.size()) +
                                                       " labels for " + std::to_string(sentences.size()) + " texts");
  }
  std::map<std::string, std::vector<Sentence>> out;
  for (std::size_t i = 0; i < sentences.size(); ++i) out[labels[i]].push_back(sentences[i]);
  return out;
}

FlipReport flipping_accuracy(const TriggerCandidate& candidate, std::span<const Sentence> sentences,
                             PredictionProvider& provider, const std::string& source_class) {
  FlipReport report{candidate.concept_id, source_class, candidate.cls, 0, 0, 0.0};
  std::vector<std::string> texts;
  texts.reserve(candidate.trigger_words.size() * sentences.size());
  for (const auto& w : candidate.trigger_words) {
    for (const auto& s : sentences) texts.push_back(w + " " + s.text);
  }
  report.n_attempts = texts.size();
  if (texts.empty()) return report;
  const auto labels = provider.predict(texts);
  if (labels.size() != texts.size()) {
    throw Error(ErrorCode::kProviderProtocolError, "provider returned " + std::to_string(labels.size()) +
                                                       " labels for " + std::to_string(texts.size()) + " texts");
  }
  report.n_flips = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), candidate.cls));
  report.accuracy = static_cast<double>(report.n_flips) / static_cast<double>(report.n_attempts);
  return report;
}

std::string TriggerDirection::label() const { return source + "→" + target; }

std::vector<int> default_trigger_layers(std::span<const int> available) {
  std::vector<int> sorted(available.begin(), available.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.size() > 3) sorted.erase(sorted.begin(), sorted.end() - 3);
  return sorted;
}

TriggerTable trigger_report(const LayeredVerdicts& verdicts, const std::map<int, ConceptInventory>& inventories,
                            std::span<const int> layers, std::span<const std::string> classes, std::size_t k,
                            std::span<const Sentence> sentences, PredictionProvider& provider) {
  TriggerTable table;
  table.layers.assign(layers.begin(), layers.end());
  for (const auto& s : classes) {
    for (const auto& t : classes) {
      if (s != t) table.directions.push_back({s, t});
    }
  }
  for (int layer : table.layers) {
    if (!verdicts.contains(layer)) {
      throw Error(ErrorCode::kMissingUpstreamArtifact, "no polarity verdicts for layer " + std::to_string(layer));
    }
    if (!inventories.contains(layer)) {
      throw Error(ErrorCode::kMissingUpstreamArtifact, "no inventory for layer " + std::to_string(layer));
    }
  }
  const auto predicted = partition_by_prediction(sentences, provider);
  const std::vector<Sentence> none;
  table.micro.assign(table.directions.size() * table.layers.size(), std::nullopt);
  table.macro.assign(table.micro.size(), std::nullopt);

  for (std::size_t l = 0; l < table.layers.size(); ++l) {
    const int layer = table.layers[l];
    std::map<std::string, std::vector<TriggerCandidate>> by_class;
    for (const auto& cls : classes) {
      by_class[cls] = select_top_polarized(verdicts.at(layer), inventories.at(layer), cls, k);
      for (const auto& c : by_class[cls]) table.candidates[layer].push_back(c.concept_id);
    }
    for (std::size_t d = 0; d < table.directions.size(); ++d) {
      const auto& dir = table.directions[d];
      const auto& cands = by_class[dir.target];
      auto it = predicted.find(dir.source);
      const auto& opposing = it == predicted.end() ? none : it->second;
      if (cands.empty() || opposing.empty()) continue;
      std::size_t flips = 0;
      std::size_t attempts = 0;
      double accuracy_sum = 0.0;
      for (const auto& c : cands) {
        auto report = flipping_accuracy(c, opposing, provider, dir.source);
        flips += report.n_flips;
        attempts += report.n_attempts;
        accuracy_sum += report.accuracy;
        table.details.push_back(std::move(report));
      }
      table.micro[d * table.layers.size() + l] = 100.0 * static_cast<double>(flips) / static_cast<double>(attempts);
      table.macro[d * table.layers.size() + l] = 100.0 * accuracy_sum / static_cast<double>(cands.size());
    }
  }
  return table;
}

void write_trigger_table_csv(const std::filesystem::path& path, const TriggerTable& table, bool macro,
                             const Provenance& provenance) {
  auto out = detail::open_for_write(path);
  out << provenance.csv_comment() << '\n';
  out << "# average: " << (macro ? "macro (mean of per-concept accuracy)" : "micro (pooled attempts)") << '\n';
  out << "direction";
  for (int layer : table.layers) out << ',' << layer;
  out << '\n';
  for (std::size_t d = 0; d < table.directions.size(); ++d) {
    out << detail::csv_field(table.directions[d].label());
    for (std::size_t l = 0; l < table.layers.size(); ++l) {
      const auto& cell = macro ? table.macro_at(d, l) : table.micro_at(d, l);
      out << ',' << (cell ? format_percent(*cell) : std::string(kMissingCell));
    }
    out << '\n';
  }
}

void write_flip_details_jsonl(const std::filesystem::path& path, const TriggerTable& table,
                              const Provenance& provenance) {
  auto out = detail::open_for_write(path);
  out << provenance.json_line() << '\n';
  for (const auto& r : table.details) {
    out << json{{"id", r.concept_id.str()},
                {"source", r.source_class},
                {"target", r.target_class},
                {"n_attempts", r.n_attempts},
                {"n_flips", r.n_flips},
                {"accuracy", r.accuracy}}
               .dump()
        << '\n';
  }
}

}  // namespace conceptlens

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "conceptlens/alignment.hpp"
#include "conceptlens/clustering.hpp"
#include "conceptlens/concepts.hpp"
#include "conceptlens/polarity.hpp"
#include "conceptlens/provider.hpp"
#include "conceptlens/triggers.hpp"

namespace conceptlens {

/// Everything a pipeline stage needs. The pipeline has no random state, so
/// identical configs over identical data give identical outputs.
struct RunConfig {
  std::filesystem::path data_dir;        ///< dump analysed by cluster/human/polarity/triggers
  std::filesystem::path base_dir;        ///< base-model dump for align and pipeline
  std::string source;                    ///< concept source tag; defaults to the dump directory name
  std::size_t k = 600;
  double theta = kDefaultTheta;
  std::size_t min_word_types = 5;
  std::vector<int> layers;               ///< empty = every layer (triggers: the final three)
  std::optional<std::size_t> max_per_type;
  bool normalize = false;
  std::vector<std::string> labels;       ///< empty = sorted distinct sentence labels
  std::vector<std::string> tasks;        ///< annotation tasks; empty = all present
  PolarityMode polarity_mode = PolarityMode::kInstance;
  bool surface_match = false;            ///< allow align across different token tables
  std::string provider_cmd;
  std::size_t batch_size = 64;
  std::size_t max_in_flight = 4;
  std::size_t trigger_k = 5;
  std::filesystem::path out_dir = "out";
  std::filesystem::path inventories_dir; ///< where upstream artifacts live; empty = out_dir

  [[nodiscard]] std::string to_json() const;
  static RunConfig from_json(const std::string& text);
  static RunConfig load(const std::filesystem::path& path);
  /// SHA-256 of the canonical JSON without output and inventory locations,
  /// so reruns into another directory stamp the same hash.
  [[nodiscard]] std::string hash() const;
  [[nodiscard]] std::filesystem::path upstream_dir() const { return inventories_dir.empty() ? out_dir : inventories_dir; }
};

std::string default_source(const std::filesystem::path& dump_dir);

/// Layer ids with an inventory `concepts_{source}_layerNN.jsonl` in `dir`.
/// With an empty source the directory must hold exactly one source, which
/// is returned through `source`.
std::vector<int> find_inventory_layers(const std::filesystem::path& dir, std::string& source);

/// Reads per-layer inventories; any requested layer without a file raises
/// MissingUpstreamArtifact.
LayeredInventories read_layered_inventories(const std::filesystem::path& dir, const std::string& source,
                                            std::span<const int> layers, std::span<const TokenInstance> tokens);

LayeredInventories eligible_only(const LayeredInventories& inventories, std::size_t min_word_types);

/// Stage results; every stage also writes its files into `config.out_dir`.
struct ClusterStageResult {
  std::string source;
  std::map<int, std::size_t> concepts_per_layer;
};

ClusterStageResult run_cluster(const RunConfig& config, std::ostream* log = nullptr);

/// task -> alignment; writes `human_{task}.csv`.
std::map<std::string, HumanAlignment> run_human(const RunConfig& config, std::ostream* log = nullptr);

/// Aligns inventories in `ft_dir` (rows) against `base_dir` (columns);
/// writes `layer_matrix.csv` and `layer_matrix.json`.
LayerMatrix run_align(const RunConfig& config, const std::filesystem::path& base_inventories,
                      const std::filesystem::path& ft_inventories, std::ostream* log = nullptr);

/// Writes `concepts_task.jsonl`, `polarity_layerNN.jsonl` and `polarity_summary.csv`.
PolarityCounts run_polarity(const RunConfig& config, std::ostream* log = nullptr);

/// Reads polarity verdicts and inventories from the upstream directory and
/// writes `triggers.csv`, `triggers_macro.csv` and `trigger_details.jsonl`.
TriggerTable run_triggers(const RunConfig& config, PredictionProvider& provider, std::ostream* log = nullptr);

/// Full run over `base_dir` and `data_dir` into `out_dir/{base,ft,align}`,
/// plus `out_dir/summary.json`. Triggers run when `provider` is non-null.
void run_pipeline(const RunConfig& config, PredictionProvider* provider, std::ostream* log = nullptr);

}  // namespace conceptlens

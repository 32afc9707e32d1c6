#include "conceptlens/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "conceptlens/layer_file.hpp"
#include "jsonl.hpp"

namespace conceptlens {

using detail::json;

namespace {

json config_json(const RunConfig& c, bool with_locations) {
  json j;
  j["data_dir"] = c.data_dir.generic_string();
  j["base_dir"] = c.base_dir.generic_string();
  j["source"] = c.source;
  j["k"] = c.k;
  j["theta"] = c.theta;
  j["min_word_types"] = c.min_word_types;
  j["layers"] = c.layers;
  j["max_per_type"] = c.max_per_type ? json(*c.max_per_type) : json(nullptr);
  j["normalize"] = c.normalize;
  j["labels"] = c.labels;
  j["tasks"] = c.tasks;
  j["polarity_mode"] = c.polarity_mode == PolarityMode::kInstance ? "instance" : "type";
  j["surface_match"] = c.surface_match;
  j["provider_cmd"] = c.provider_cmd;
  j["batch_size"] = c.batch_size;
  j["max_in_flight"] = c.max_in_flight;
  j["trigger_k"] = c.trigger_k;
  if (with_locations) {
    j["out_dir"] = c.out_dir.generic_string();
    j["inventories_dir"] = c.inventories_dir.generic_string();
  }
  return j;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
  return out;
}

Provenance make_provenance(const RunConfig& config, std::string data_hash, const std::string& stage) {
  Provenance p;
  p.config_hash = config.hash();
  p.dataset_hash = std::move(data_hash);
  p.extra["stage"] = stage;
  p.extra["k"] = std::to_string(config.k);
  p.extra["theta"] = json(config.theta).dump();
  p.extra["min_word_types"] = std::to_string(config.min_word_types);
  return p;
}

void say(std::ostream* log, const std::string& line) {
  if (log != nullptr) *log << line << '\n';
}

std::vector<int> requested_layers(const RunConfig& config, std::vector<int> available) {
  if (config.layers.empty()) return available;
  for (int l : config.layers) {
    if (std::find(available.begin(), available.end(), l) == available.end()) {
      throw Error(ErrorCode::kUnknownLayer, "layer " + std::to_string(l) + " is not available");
    }
  }
  std::vector<int> out = config.layers;
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::string> resolve_labels(const RunConfig& config, const Dataset& dataset) {
  if (!config.labels.empty()) return config.labels;
  std::set<std::string> seen;
  for (const auto& s : dataset.sentences()) {
    if (s.label) seen.insert(*s.label);
  }
  return {seen.begin(), seen.end()};
}

Dataset load_for(const RunConfig& config, const std::filesystem::path& dir, bool strict) {
  LoadOptions options;
  options.strict = strict;
  options.label_set = config.labels;
  return load_dataset(dir, options);
}

void write_config(const RunConfig& config) {
  std::filesystem::create_directories(config.out_dir);
  auto out = detail::open_for_write(config.out_dir / "config.json");
  out << config_json(config, false).dump(2) << '\n';
}

}  // namespace

std::string RunConfig::to_json() const { return config_json(*this, true).dump(2); }

RunConfig RunConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kMalformedInput, std::string("config: ") + e.what());
  }
  RunConfig c;
  try {
    c.data_dir = j.value("data_dir", std::string{});
    c.base_dir = j.value("base_dir", std::string{});
    c.source = j.value("source", std::string{});
    c.k = j.value("k", c.k);
    c.theta = j.value("theta", c.theta);
    c.min_word_types = j.value("min_word_types", c.min_word_types);
    c.layers = j.value("layers", std::vector<int>{});
    if (j.contains("max_per_type") && !j["max_per_type"].is_null()) c.max_per_type = j["max_per_type"].get<std::size_t>();
    c.normalize = j.value("normalize", false);
    c.labels = j.value("labels", std::vector<std::string>{});
    c.tasks = j.value("tasks", std::vector<std::string>{});
    const auto mode = j.value("polarity_mode", std::string("instance"));
    if (mode != "instance" && mode != "type") throw Error(ErrorCode::kInvalidArgument, "polarity_mode: " + mode);
    c.polarity_mode = mode == "instance" ? PolarityMode::kInstance : PolarityMode::kWordType;
    c.surface_match = j.value("surface_match", false);
    c.provider_cmd = j.value("provider_cmd", std::string{});
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
    c.trigger_k = j.value("trigger_k", c.trigger_k);
    c.out_dir = j.value("out_dir", std::string("out"));
    c.inventories_dir = j.value("inventories_dir", std::string{});
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedInput, std::string("config: ") + e.what());
  }
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string RunConfig::hash() const { return sha256_hex(config_json(*this, false).dump()); }

std::string default_source(const std::filesystem::path& dump_dir) {
  auto p = dump_dir.lexically_normal();
  if (p.filename().empty()) p = p.parent_path();
  auto name = p.filename().string();
  return name.empty() || name == "." ? "model" : name;
}

std::vector<int> find_inventory_layers(const std::filesystem::path& dir, std::string& source) {
  static const std::regex kPattern(R"(concepts_(.+)_layer(\d+)\.jsonl)");
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::kMissingUpstreamArtifact, "no inventory directory " + dir.string());
  }
  std::map<std::string, std::set<int>> found;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    std::smatch m;
    if (std::regex_match(name, m, kPattern)) found[m[1].str()].insert(std::stoi(m[2].str()));
  }
  if (source.empty()) {
    if (found.size() > 1) {
      throw Error(ErrorCode::kInvalidArgument, "several concept sources in " + dir.string() + "; choose one");
    }
    if (found.empty()) throw Error(ErrorCode::kMissingUpstreamArtifact, "no encoded inventories in " + dir.string());
    source = found.begin()->first;
  }
  auto it = found.find(source);
  if (it == found.end()) {
    throw Error(ErrorCode::kMissingUpstreamArtifact, "no inventories for source '" + source + "' in " + dir.string());
  }
  return {it->second.begin(), it->second.end()};
}

LayeredInventories read_layered_inventories(const std::filesystem::path& dir, const std::string& source,
                                            std::span<const int> layers, std::span<const TokenInstance> tokens) {
  LayeredInventories out;
  for (int l : layers) out.emplace(l, read_inventory(dir / inventory_file_name(source, l), tokens));
  return out;
}

LayeredInventories eligible_only(const LayeredInventories& inventories, std::size_t min_word_types) {
  LayeredInventories out;
  for (const auto& [layer, inv] : inventories) out.emplace(layer, filter_eligible(inv, min_word_types));
  return out;
}

ClusterStageResult run_cluster(const RunConfig& config, std::ostream* log) {
  const Dataset dataset = load_for(config, config.data_dir, true);
  ClusterStageResult result;
  result.source = config.source.empty() ? default_source(config.data_dir) : config.source;
  const auto layers = requested_layers(config, dataset.layer_ids());
  write_config(config);
  auto provenance = make_provenance(config, dataset_hash(dataset), "cluster");
  provenance.extra["source"] = result.source;
  provenance.extra["normalize"] = config.normalize ? "true" : "false";
  if (config.max_per_type) provenance.extra["max_per_type"] = std::to_string(*config.max_per_type);

  ClusterOptions options;
  options.unit_normalize = config.normalize;
  for (int layer_id : layers) {
    const auto started = std::chrono::steady_clock::now();
    auto layer = dataset.load_layer(layer_id);
    const InstanceView view = select_instances(dataset, layer, config.max_per_type);
    const auto clustering = cluster_layer(view, config.k, options);
    auto inventory = partition_to_concepts(clustering.partition, view, dataset, result.source, layer_id);
    if (config.max_per_type) inventory.parameters["max_per_type"] = std::to_string(*config.max_per_type);
    write_inventory(config.out_dir / inventory_file_name(result.source, layer_id), inventory, provenance);
    write_dendrogram(config.out_dir / dendrogram_file_name(layer_id), clustering.dendrogram, provenance);
    result.concepts_per_layer[layer_id] = inventory.size();
    const std::chrono::duration<double> took = std::chrono::steady_clock::now() - started;
    say(log, "cluster " + result.source + " layer " + std::to_string(layer_id) + ": " + std::to_string(view.size()) +
                 " instances -> " + std::to_string(inventory.size()) + " concepts (" + std::to_string(took.count()) +
                 " s)");
  }
  return result;
}

std::map<std::string, HumanAlignment> run_human(const RunConfig& config, std::ostream* log) {
  const Dataset dataset = load_for(config, config.data_dir, true);
  std::string source = config.source;
  const auto layers = requested_layers(config, find_inventory_layers(config.upstream_dir(), source));
  const auto encoded = eligible_only(read_layered_inventories(config.upstream_dir(), source, layers, dataset.tokens()),
                                     config.min_word_types);
  std::vector<std::string> tasks = config.tasks;
  if (tasks.empty()) {
    for (const auto& [task, ann] : dataset.annotations()) tasks.push_back(task);
  }
  if (tasks.empty()) throw Error(ErrorCode::kMissingFile, "no tags_*.jsonl in " + config.data_dir.string());

  std::filesystem::create_directories(config.out_dir);
  const auto provenance = make_provenance(config, dataset_hash(dataset), "human");
  std::map<std::string, HumanAlignment> out;
  for (const auto& task : tasks) {
    const auto human = build_human_concepts(dataset, dataset.annotation(task));
    write_inventory(config.out_dir / inventory_file_name(task), human, provenance);
    auto counts = human_alignment_counts(encoded, human, config.theta);
    write_human_counts_csv(config.out_dir / ("human_" + task + ".csv"), counts, provenance);
    say(log, "human " + task + ": " + std::to_string(human.size()) + " tags, " + format_percent(counts.percent_aligned()) +
                 "% of eligible concepts aligned");
    out.emplace(task, std::move(counts));
  }
  return out;
}

LayerMatrix run_align(const RunConfig& config, const std::filesystem::path& base_inventories,
                      const std::filesystem::path& ft_inventories, std::ostream* log) {
  const Dataset ft_data = load_for(config, config.data_dir, false);
  const bool separate_base = !config.base_dir.empty() && config.base_dir != config.data_dir;
  const Dataset base_data = separate_base ? load_for(config, config.base_dir, false) : ft_data;

  std::string ft_source;
  std::string base_source;
  const auto ft_layers = requested_layers(config, find_inventory_layers(ft_inventories, ft_source));
  const auto base_layers = requested_layers(config, find_inventory_layers(base_inventories, base_source));
  const auto ft = eligible_only(read_layered_inventories(ft_inventories, ft_source, ft_layers, ft_data.tokens()),
                                config.min_word_types);
  const auto base = eligible_only(
      read_layered_inventories(base_inventories, base_source, base_layers, base_data.tokens()), config.min_word_types);

  MatchOptions options;
  const std::string ft_space = ft.begin()->second.instance_space_hash();
  const std::string base_space = base.begin()->second.instance_space_hash();
  if (ft_space != base_space) {
    if (!config.surface_match) {
      throw Error(ErrorCode::kInstanceSpaceMismatch,
                  "inventories come from different token tables; surface matching must be requested explicitly");
    }
    say(log, "warning: token tables differ, matching concept members by surface form");
    options.mode = MatchMode::kSurface;
    options.from_tokens = ft_data.tokens();
    options.to_tokens = base_data.tokens();
  }
  const auto matrix = layer_pair_matrix(ft, base, config.theta, options);

  std::filesystem::create_directories(config.out_dir);
  auto provenance = make_provenance(config, sha256_hex(ft_space + base_space), "align");
  provenance.extra["rows"] = ft_source;
  provenance.extra["cols"] = base_source;
  provenance.extra["match"] = options.mode == MatchMode::kInstance ? "instance" : "surface";
  write_layer_matrix_csv(config.out_dir / "layer_matrix.csv", matrix, provenance);
  write_layer_matrix_json(config.out_dir / "layer_matrix.json", matrix, provenance);
  say(log, "align " + ft_source + " x " + base_source + ": " + std::to_string(matrix.rows.size()) + "x" +
               std::to_string(matrix.cols.size()) + " matrix");
  return matrix;
}

PolarityCounts run_polarity(const RunConfig& config, std::ostream* log) {
  const Dataset dataset = load_for(config, config.data_dir, true);
  const auto labels = resolve_labels(config, dataset);
  std::string source = config.source;
  const auto layers = requested_layers(config, find_inventory_layers(config.upstream_dir(), source));
  const auto encoded = eligible_only(read_layered_inventories(config.upstream_dir(), source, layers, dataset.tokens()),
                                     config.min_word_types);
  const auto task = build_task_concepts(dataset, labels, "task");
  for (const auto& label : labels) {
    if (task.find(ConceptId{"task", std::nullopt, label}) == nullptr) {
      say(log, "warning: label '" + label + "' has no exclusive word types; its task concept is empty");
    }
  }
  const auto verdicts = classify_layers(encoded, task, config.theta, config.polarity_mode);
  auto counts = polarity_counts(verdicts, labels);

  std::filesystem::create_directories(config.out_dir);
  auto provenance = make_provenance(config, dataset_hash(dataset), "polarity");
  provenance.extra["labels"] = join(labels);
  provenance.extra["mode"] = config.polarity_mode == PolarityMode::kInstance ? "instance" : "type";
  write_inventory(config.out_dir / inventory_file_name("task"), task, provenance);
  for (const auto& [layer, list] : verdicts) {
    write_polarity_jsonl(config.out_dir / polarity_file_name(layer), list, provenance);
  }
  write_polarity_summary_csv(config.out_dir / "polarity_summary.csv", counts, provenance);
  for (const auto& [layer, per_class] : counts.counts) {
    std::string line = "polarity " + source + " layer " + std::to_string(layer) + ":";
    for (const auto& cls : counts.classes) line += " " + cls + "=" + std::to_string(per_class.at(cls));
    say(log, line);
  }
  return counts;
}

TriggerTable run_triggers(const RunConfig& config, PredictionProvider& provider, std::ostream* log) {
  const Dataset dataset = load_for(config, config.data_dir, false);
  const auto dir = config.upstream_dir();
  std::string source = config.source;
  std::vector<int> available;
  for (int l : find_inventory_layers(dir, source)) {
    if (std::filesystem::exists(dir / polarity_file_name(l))) available.push_back(l);
  }
  if (available.empty()) throw Error(ErrorCode::kMissingUpstreamArtifact, "no polarity verdicts in " + dir.string());
  const auto layers = config.layers.empty() ? default_trigger_layers(available) : requested_layers(config, available);

  LayeredVerdicts verdicts;
  for (int l : layers) verdicts[l] = read_polarity_jsonl(dir / polarity_file_name(l));
  const auto inventories = read_layered_inventories(dir, source, layers, dataset.tokens());

  std::vector<std::string> classes = config.labels;
  if (classes.empty()) {
    const auto task_path = dir / inventory_file_name("task");
    if (std::filesystem::exists(task_path)) classes = task_classes(read_inventory(task_path, dataset.tokens()));
  }
  if (classes.empty()) throw Error(ErrorCode::kMissingUpstreamArtifact, "cannot determine the class labels");

  auto table = trigger_report(verdicts, inventories, layers, classes, config.trigger_k, dataset.sentences(), provider);

  std::filesystem::create_directories(config.out_dir);
  auto provenance = make_provenance(config, dataset_hash(dataset), "triggers");
  provenance.extra["trigger_k"] = std::to_string(config.trigger_k);
  provenance.extra["labels"] = join(classes);
  write_trigger_table_csv(config.out_dir / "triggers.csv", table, false, provenance);
  write_trigger_table_csv(config.out_dir / "triggers_macro.csv", table, true, provenance);
  write_flip_details_jsonl(config.out_dir / "trigger_details.jsonl", table, provenance);
  say(log, "triggers: " + std::to_string(table.details.size()) + " concept/direction reports over " +
               std::to_string(layers.size()) + " layers");
  return table;
}

void run_pipeline(const RunConfig& config, PredictionProvider* provider, std::ostream* log) {
  if (config.data_dir.empty() || config.base_dir.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "pipeline needs both a base dump and a fine-tuned dump");
  }
  auto stage = [&](const std::filesystem::path& data, const std::string& sub, const std::string& source) {
    RunConfig c = config;
    c.data_dir = data;
    c.base_dir.clear();
    c.source = source;
    c.out_dir = config.out_dir / sub;
    c.inventories_dir = c.out_dir;
    return c;
  };
  std::string ft_source = config.source.empty() ? default_source(config.data_dir) : config.source;
  std::string base_source = default_source(config.base_dir);
  if (base_source == ft_source) base_source += "-base";
  const RunConfig base_cfg = stage(config.base_dir, "base", base_source);
  const RunConfig ft_cfg = stage(config.data_dir, "ft", ft_source);

  run_cluster(base_cfg, log);
  run_cluster(ft_cfg, log);

  std::vector<AlignmentSummary> summary;
  const Dataset probe = load_for(config, config.data_dir, false);
  if (!probe.annotations().empty() || !config.tasks.empty()) {
    for (const auto& [name, cfg] : {std::pair{std::string("base"), &base_cfg}, std::pair{std::string("ft"), &ft_cfg}}) {
      for (const auto& [task, counts] : run_human(*cfg, log)) {
        summary.push_back(AlignmentSummary{cfg->source, task, task, counts.percent_aligned()});
      }
    }
  }
  bool labelled = !probe.sentences().empty();
  for (const auto& s : probe.sentences()) labelled = labelled && s.label.has_value();
  if (labelled) {
    run_polarity(base_cfg, log);
    run_polarity(ft_cfg, log);
  }

  RunConfig align_cfg = config;
  align_cfg.out_dir = config.out_dir / "align";
  run_align(align_cfg, base_cfg.out_dir, ft_cfg.out_dir, log);

  if (provider != nullptr && labelled) run_triggers(ft_cfg, *provider, log);

  const auto provenance = make_provenance(config, sha256_hex(instance_space_hash(probe)), "pipeline");
  write_summary_json(config.out_dir / "summary.json", summary, provenance);
  write_config(config);
}

}  // namespace conceptlens

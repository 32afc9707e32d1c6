#include <CLI11.hpp>

#include <cstring>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "conceptlens/embedding_store.hpp"
#include "conceptlens/error.hpp"
#include "conceptlens/pipeline.hpp"
#include "conceptlens/provenance.hpp"
#include "conceptlens/provider.hpp"
#include "conceptlens/synthetic.hpp"

namespace cl = conceptlens;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitProtocol = 3;
constexpr int kExitMissingArtifact = 4;

int exit_code_for(cl::ErrorCode code) {
  switch (code) {
    case cl::ErrorCode::kProviderUnavailable:
    case cl::ErrorCode::kProviderProtocolError:
      return kExitProtocol;
    case cl::ErrorCode::kMissingUpstreamArtifact:
      return kExitMissingArtifact;
    case cl::ErrorCode::kInvalidArgument:
    case cl::ErrorCode::kKOutOfRange:
    case cl::ErrorCode::kThetaOutOfRange:
    case cl::ErrorCode::kIoError:
      return kExitUsage;
    default:
      return kExitValidation;
  }
}

/// Finds `--config FILE` ahead of the real parse so that the file supplies
/// defaults and explicit flags override it.
cl::RunConfig initial_config(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::strcmp(argv[i], "--config") == 0) return cl::RunConfig::load(argv[i + 1]);
  }
  for (int i = 1; i < argc; ++i) {
    constexpr std::string_view prefix = "--config=";
    if (std::string_view(argv[i]).starts_with(prefix)) return cl::RunConfig::load(argv[i] + prefix.size());
  }
  return {};
}

struct Flags {
  std::string polarity_mode;
  std::string exchange_dir;
  std::filesystem::path base_inventories;
  std::filesystem::path ft_inventories;
  std::string config_file;
};

void add_data(CLI::App* app, cl::RunConfig& c) {
  app->add_option("--data", c.data_dir, "Embedding dump directory");
  app->add_option("--labels", c.labels, "Class labels (comma separated)")->delimiter(',');
}

void add_analysis(CLI::App* app, cl::RunConfig& c, Flags& f) {
  app->add_option("--source", c.source, "Concept source tag (defaults to the dump directory name)");
  app->add_option("--k", c.k, "Clusters per layer")->check(CLI::PositiveNumber);
  app->add_option("--theta", c.theta, "Alignment threshold in (0, 1]");
  app->add_option("--min-word-types", c.min_word_types, "Concepts need more than this many word types");
  app->add_option("--layers", c.layers, "Layer ids (comma separated)")->delimiter(',');
  app->add_option("--out-dir", c.out_dir, "Output directory");
  app->add_option("--inventories", c.inventories_dir, "Directory holding upstream artifacts (default: --out-dir)");
  app->add_option("--config", f.config_file, "JSON run config supplying defaults");
}

void add_provider(CLI::App* app, cl::RunConfig& c, Flags& f) {
  app->add_option("--provider-cmd", c.provider_cmd, "Shell command speaking the line protocol");
  app->add_option("--exchange-dir", f.exchange_dir, "Use file exchange in this directory; --provider-cmd may use {requests} and {responses}");
  app->add_option("--batch-size", c.batch_size, "Requests per batch")->check(CLI::PositiveNumber);
  app->add_option("--max-in-flight", c.max_in_flight, "Concurrent batches")->check(CLI::PositiveNumber);
  app->add_option("--trigger-k", c.trigger_k, "Top polarized concepts per class")->check(CLI::PositiveNumber);
}

std::unique_ptr<cl::PredictionProvider> make_provider(const cl::RunConfig& c, const Flags& f) {
  if (!f.exchange_dir.empty()) return std::make_unique<cl::FileExchangeProvider>(f.exchange_dir, c.provider_cmd);
  if (c.provider_cmd.empty()) return nullptr;
  cl::SubprocessOptions options;
  options.batch_size = c.batch_size;
  options.max_in_flight = c.max_in_flight;
  return std::make_unique<cl::SubprocessProvider>(c.provider_cmd, options);
}

void apply_mode(cl::RunConfig& c, const Flags& f) {
  if (f.polarity_mode.empty()) return;
  c.polarity_mode = f.polarity_mode == "type" ? cl::PolarityMode::kWordType : cl::PolarityMode::kInstance;
}

int cmd_validate(const cl::RunConfig& c) {
  cl::LoadOptions options;
  options.strict = false;
  options.label_set = c.labels;
  const auto dataset = cl::load_dataset(c.data_dir, options);
  const auto report = cl::validate_dataset(dataset);
  for (const auto& f : report.findings) {
    std::cout << cl::to_string(f.code) << '\t' << f.location << '\t' << f.message << '\n';
  }
  if (!report.ok()) {
    std::cerr << report.findings.size() << " finding(s)\n";
    return kExitValidation;
  }
  std::cout << "ok: " << dataset.size() << " instances, " << dataset.layer_count() << " layers, dim "
            << dataset.dim() << ", " << dataset.sentences().size() << " sentences\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent concept discovery and alignment for per-layer embeddings"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(cl::kToolVersion));

  cl::RunConfig config;
  try {
    config = initial_config(argc, argv);
  } catch (const cl::Error& e) {
    std::cerr << "error: --config: " << e.what() << '\n';
    return kExitUsage;
  }
  Flags flags;

  auto* validate = app.add_subcommand("validate", "Check a dump and report every finding");
  add_data(validate, config);

  auto* cluster = app.add_subcommand("cluster", "Ward-cluster each layer into K encoded concepts");
  add_data(cluster, config);
  add_analysis(cluster, config, flags);
  cluster->add_option("--max-per-type", config.max_per_type, "Cap on instances per word type")
      ->check(CLI::PositiveNumber);
  cluster->add_flag("--normalize", config.normalize, "Scale vectors to unit length first");

  auto* human = app.add_subcommand("human", "Align encoded concepts with annotation tags");
  add_data(human, config);
  add_analysis(human, config, flags);
  human->add_option("--tasks", config.tasks, "Annotation tasks (default: every tags_*.jsonl)")->delimiter(',');

  auto* align = app.add_subcommand("align", "Fine-tuned vs base layer overlap matrix");
  add_data(align, config);
  add_analysis(align, config, flags);
  align->add_option("--base", config.base_dir, "Base-model dump directory (default: --data)");
  align->add_option("--base-inventories", flags.base_inventories, "Directory of base inventories")->required();
  align->add_option("--ft-inventories", flags.ft_inventories, "Directory of fine-tuned inventories")->required();
  align->add_flag("--surface-match", config.surface_match, "Match members by surface form across token tables");

  auto* polarity = app.add_subcommand("polarity", "Label encoded concepts by class affinity");
  add_data(polarity, config);
  add_analysis(polarity, config, flags);
  polarity->add_option("--mode", flags.polarity_mode, "Overlap on instances or word types")
      ->check(CLI::IsMember({"instance", "type"}));

  auto* triggers = app.add_subcommand("triggers", "Flipping accuracy of top polarized concepts");
  add_data(triggers, config);
  add_analysis(triggers, config, flags);
  add_provider(triggers, config, flags);

  auto* pipeline = app.add_subcommand("pipeline", "cluster, human, polarity, align and triggers for two dumps");
  add_data(pipeline, config);
  add_analysis(pipeline, config, flags);
  add_provider(pipeline, config, flags);
  pipeline->add_option("--base", config.base_dir, "Base-model dump directory")->required(config.base_dir.empty());
  pipeline->add_option("--max-per-type", config.max_per_type, "Cap on instances per word type")
      ->check(CLI::PositiveNumber);
  pipeline->add_flag("--normalize", config.normalize, "Scale vectors to unit length first");
  pipeline->add_option("--tasks", config.tasks, "Annotation tasks")->delimiter(',');
  pipeline->add_option("--mode", flags.polarity_mode, "Polarity overlap on instances or word types")
      ->check(CLI::IsMember({"instance", "type"}));

  cl::SyntheticSpec spec;
  std::filesystem::path fixture_out;
  auto* fixture = app.add_subcommand("make-fixture", "Write the synthetic two-model fixture");
  fixture->add_option("--out", fixture_out, "Fixture root")->required();
  fixture->add_option("--instances", spec.instances);
  fixture->add_option("--tokens-per-sentence", spec.tokens_per_sentence);
  fixture->add_option("--dim", spec.dim);
  fixture->add_option("--layers", spec.layers);
  fixture->add_option("--groups", spec.groups);
  fixture->add_option("--words-per-group", spec.words_per_group);
  fixture->add_option("--pure-fraction", spec.pure_fraction);
  fixture->add_option("--planted-from", spec.planted_from_layer);
  fixture->add_option("--seed", spec.seed);
  fixture->add_option("--labels", spec.labels)->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    apply_mode(config, flags);
    if (config.data_dir.empty() && !fixture->parsed()) {
      std::cerr << "error: --data is required\n";
      return kExitUsage;
    }
    if (validate->parsed()) return cmd_validate(config);
    if (cluster->parsed()) {
      cl::run_cluster(config, &std::cerr);
    } else if (human->parsed()) {
      cl::run_human(config, &std::cerr);
    } else if (align->parsed()) {
      cl::run_align(config, flags.base_inventories, flags.ft_inventories, &std::cerr);
    } else if (polarity->parsed()) {
      cl::run_polarity(config, &std::cerr);
    } else if (triggers->parsed()) {
      auto provider = make_provider(config, flags);
      if (!provider) {
        std::cerr << "error: triggers need --provider-cmd or --exchange-dir\n";
        return kExitUsage;
      }
      cl::run_triggers(config, *provider, &std::cerr);
    } else if (pipeline->parsed()) {
      auto provider = make_provider(config, flags);
      cl::run_pipeline(config, provider.get(), &std::cerr);
    } else if (fixture->parsed()) {
      const auto truth = cl::write_synthetic_fixture(fixture_out, spec);
      std::cerr << "fixture: " << truth.instances << " instances, " << truth.sentences << " sentences -> "
                << fixture_out.string() << '\n';
    }
  } catch (const cl::Error& e) {
    std::cerr << "error: " << cl::to_string(e.code()) << ": " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitOk;
}

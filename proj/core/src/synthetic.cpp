#include "conceptlens/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "conceptlens/embedding_store.hpp"
#include "conceptlens/error.hpp"
#include "conceptlens/layer_file.hpp"
#include "conceptlens/polarity.hpp"
#include "jsonl.hpp"

namespace conceptlens {

using detail::json;

namespace {

std::string word_name(std::size_t w, std::size_t words_per_group) {
  return "g" + std::to_string(w / words_per_group) + "w" + std::to_string(w % words_per_group);
}

void write_dump_layers(const std::filesystem::path& dir, const SyntheticSpec& spec,
                       const std::vector<std::size_t>& word_of_token, bool planted_layers, std::uint64_t salt) {
  const std::size_t n = word_of_token.size();
  for (std::size_t l = 0; l < spec.layers; ++l) {
    const bool planted = planted_layers && static_cast<int>(l) >= spec.planted_from_layer;
    std::mt19937_64 rng(spec.seed * 1000003ULL + salt * 7919ULL + l);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> centres(spec.groups * spec.dim);
    for (auto& c : centres) c = gauss(rng) * spec.centre_scale;

    LayerWriter writer(dir / layer_file_name(static_cast<int>(l)), static_cast<std::uint32_t>(spec.dim), n);
    std::vector<float> row(spec.dim);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t w = word_of_token[i];
      const std::size_t g = planted ? w / spec.words_per_group : w % spec.groups;
      for (std::size_t d = 0; d < spec.dim; ++d) {
        row[d] = static_cast<float>(centres[g * spec.dim + d] + gauss(rng) * spec.noise);
      }
      writer.append_row(row);
    }
    writer.close();
  }
}

}  // namespace

SyntheticTruth write_synthetic_fixture(const std::filesystem::path& root, const SyntheticSpec& spec) {
  const std::size_t n_labels = spec.labels.size();
  if (n_labels < 2 || spec.groups == 0 || spec.words_per_group == 0 || spec.tokens_per_sentence == 0 ||
      spec.dim == 0 || spec.layers == 0) {
    throw Error(ErrorCode::kInvalidArgument, "degenerate synthetic spec");
  }
  const std::size_t words = spec.groups * spec.words_per_group;
  const auto n_pure = static_cast<std::size_t>(std::llround(spec.pure_fraction * static_cast<double>(spec.groups)));
  if (n_pure > spec.groups) throw Error(ErrorCode::kInvalidArgument, "pure_fraction above 1");

  // Group g < n_pure is pure for label g % n_labels; the rest are shared.
  auto group_label = [&](std::size_t g) -> int {
    return g < n_pure ? static_cast<int>(g % n_labels) : -1;
  };

  const std::size_t n_sentences = (spec.instances + spec.tokens_per_sentence - 1) / spec.tokens_per_sentence;
  std::vector<std::size_t> stream_len(n_labels, 0);
  for (std::size_t s = 0; s < n_sentences; ++s) {
    const std::size_t len = std::min(spec.tokens_per_sentence, spec.instances - s * spec.tokens_per_sentence);
    stream_len[s % n_labels] += len;
  }

  std::mt19937_64 rng(spec.seed);
  std::vector<std::vector<std::size_t>> streams(n_labels);
  for (std::size_t lab = 0; lab < n_labels; ++lab) {
    std::vector<std::size_t> pool;
    for (std::size_t w = 0; w < words; ++w) {
      const int gl = group_label(w / spec.words_per_group);
      if (gl < 0 || gl == static_cast<int>(lab)) pool.push_back(w);
    }
    // Every pool word appears at least once, so shared words are seen under
    // every label and pure words exist.
    if (stream_len[lab] < pool.size()) {
      throw Error(ErrorCode::kInvalidArgument, "too few instances for label " + spec.labels[lab]);
    }
    auto& stream = streams[lab];
    stream = pool;
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    while (stream.size() < stream_len[lab]) stream.push_back(pool[pick(rng)]);
    std::shuffle(stream.begin(), stream.end(), rng);
  }

  std::vector<TokenInstance> tokens;
  std::vector<Sentence> sentences;
  std::vector<std::string> tags;
  std::vector<std::size_t> word_of_token;
  tokens.reserve(spec.instances);
  std::vector<std::size_t> cursor(n_labels, 0);
  for (std::size_t s = 0; s < n_sentences; ++s) {
    const std::size_t lab = s % n_labels;
    const std::size_t len = std::min(spec.tokens_per_sentence, spec.instances - s * spec.tokens_per_sentence);
    std::string text;
    for (std::size_t t = 0; t < len; ++t) {
      const std::size_t w = streams[lab][cursor[lab]++];
      const std::string surface = word_name(w, spec.words_per_group);
      tokens.push_back(TokenInstance{static_cast<InstanceId>(tokens.size()), static_cast<std::uint32_t>(s),
                                     static_cast<std::uint32_t>(t), surface});
      tags.push_back("T" + std::to_string(w % spec.groups));
      word_of_token.push_back(w);
      if (!text.empty()) text += ' ';
      text += surface;
    }
    sentences.push_back(Sentence{static_cast<std::uint32_t>(s), std::move(text), spec.labels[lab]});
  }

  // The stride grouping must stay class-mixed, otherwise the all-neutral
  // claim for base layers would not hold.
  for (std::size_t m = 0; m < spec.groups; ++m) {
    std::vector<std::size_t> per_label(n_labels, 0);
    std::size_t total = 0;
    for (std::size_t i = 0; i < word_of_token.size(); ++i) {
      const std::size_t w = word_of_token[i];
      if (w % spec.groups != m) continue;
      ++total;
      const int gl = group_label(w / spec.words_per_group);
      if (gl >= 0) ++per_label[static_cast<std::size_t>(gl)];
    }
    for (std::size_t lab = 0; lab < n_labels; ++lab) {
      if (total > 0 && static_cast<double>(per_label[lab]) >= 0.5 * static_cast<double>(total)) {
        throw Error(ErrorCode::kInvalidArgument, "stride group " + std::to_string(m) + " is not class-mixed");
      }
    }
  }

  SyntheticTruth truth;
  truth.sentences = sentences.size();
  truth.instances = tokens.size();
  for (std::size_t l = 0; l < spec.layers; ++l) {
    auto& base = truth.base_polarity[static_cast<int>(l)];
    auto& ft = truth.ft_polarity[static_cast<int>(l)];
    for (const auto& label : spec.labels) base[label] = ft[label] = 0;
    base[std::string(kNeutral)] = spec.groups;
    if (static_cast<int>(l) >= spec.planted_from_layer) {
      for (std::size_t g = 0; g < n_pure; ++g) ++ft[spec.labels[g % n_labels]];
      ft[std::string(kNeutral)] = spec.groups - n_pure;
    } else {
      ft[std::string(kNeutral)] = spec.groups;
    }
  }

  const auto write_sidecars = [&](const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_tokens(dir / "tokens.jsonl", tokens);
    write_sentences(dir / "sentences.jsonl", sentences);
    write_tags(dir / ("tags_" + spec.tag_task + ".jsonl"), tokens, tags);
  };
  write_sidecars(root / "base");
  write_sidecars(root / "ft");
  write_dump_layers(root / "base", spec, word_of_token, false, 1);
  write_dump_layers(root / "ft", spec, word_of_token, true, 2);

  json doc;
  doc["spec"] = {{"instances", spec.instances},   {"tokens_per_sentence", spec.tokens_per_sentence},
                 {"dim", spec.dim},               {"layers", spec.layers},
                 {"groups", spec.groups},         {"words_per_group", spec.words_per_group},
                 {"pure_fraction", spec.pure_fraction}, {"planted_from_layer", spec.planted_from_layer},
                 {"labels", spec.labels},         {"tag_task", spec.tag_task},
                 {"seed", spec.seed}};
  auto to_json = [](const std::map<int, std::map<std::string, std::size_t>>& m) {
    json out = json::object();
    for (const auto& [layer, counts] : m) out[std::to_string(layer)] = counts;
    return out;
  };
  doc["ft_polarity"] = to_json(truth.ft_polarity);
  doc["base_polarity"] = to_json(truth.base_polarity);
  auto out = detail::open_for_write(root / "truth.json");
  out << doc.dump(2) << '\n';
  return truth;
}

}  // namespace conceptlens

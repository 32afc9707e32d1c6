#pragma once

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "conceptlens/clustering.hpp"
#include "conceptlens/concepts.hpp"
#include "conceptlens/embedding_store.hpp"
#include "conceptlens/layer_file.hpp"

namespace testsupport {

namespace cl = conceptlens;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "cl") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            (tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  [[nodiscard]] const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// A dump described in memory: sentences of whitespace-separated words,
/// optional labels, and one tag list per task.
struct ToyDump {
  std::vector<std::vector<std::string>> sentences;
  std::vector<std::optional<std::string>> labels;
  std::map<std::string, std::vector<std::string>> tags;  ///< task -> tag per token, global order
  std::size_t layers = 2;
  std::size_t dim = 4;
  std::uint64_t seed = 1;

  [[nodiscard]] std::size_t token_count() const {
    std::size_t n = 0;
    for (const auto& s : sentences) n += s.size();
    return n;
  }
};

inline std::vector<cl::TokenInstance> toy_tokens(const ToyDump& dump) {
  std::vector<cl::TokenInstance> tokens;
  for (std::size_t s = 0; s < dump.sentences.size(); ++s) {
    for (std::size_t t = 0; t < dump.sentences[s].size(); ++t) {
      tokens.push_back(cl::TokenInstance{static_cast<cl::InstanceId>(tokens.size()), static_cast<std::uint32_t>(s),
                                         static_cast<std::uint32_t>(t), dump.sentences[s][t]});
    }
  }
  return tokens;
}

/// Writes the dump with random layer vectors; returns the token table.
inline std::vector<cl::TokenInstance> write_toy_dump(const std::filesystem::path& dir, const ToyDump& dump) {
  std::filesystem::create_directories(dir);
  const auto tokens = toy_tokens(dump);
  std::vector<cl::Sentence> sentences;
  for (std::size_t s = 0; s < dump.sentences.size(); ++s) {
    std::string text;
    for (const auto& w : dump.sentences[s]) text += (text.empty() ? "" : " ") + w;
    sentences.push_back(cl::Sentence{static_cast<std::uint32_t>(s), text,
                                     s < dump.labels.size() ? dump.labels[s] : std::nullopt});
  }
  cl::write_tokens(dir / "tokens.jsonl", tokens);
  cl::write_sentences(dir / "sentences.jsonl", sentences);
  for (const auto& [task, tags] : dump.tags) cl::write_tags(dir / ("tags_" + task + ".jsonl"), tokens, tags);
  std::mt19937_64 rng(dump.seed);
  std::normal_distribution<float> g;
  for (std::size_t l = 0; l < dump.layers; ++l) {
    std::vector<float> values(tokens.size() * dump.dim);
    for (auto& v : values) v = g(rng);
    cl::write_layer(dir / cl::layer_file_name(static_cast<int>(l)),
                    cl::EmbeddingLayer(static_cast<int>(l), dump.dim, std::move(values)));
  }
  return tokens;
}

inline std::vector<cl::TokenInstance> plain_tokens(std::size_t n) {
  std::vector<cl::TokenInstance> tokens;
  for (std::size_t i = 0; i < n; ++i) {
    tokens.push_back(cl::TokenInstance{static_cast<cl::InstanceId>(i), 0, static_cast<std::uint32_t>(i),
                                       "w" + std::to_string(i)});
  }
  return tokens;
}

inline cl::Concept make_concept(const std::string& source, std::optional<int> layer, const std::string& name,
                                std::vector<cl::InstanceId> members, std::span<const cl::TokenInstance> tokens,
                                cl::ConceptKind kind = cl::ConceptKind::kEncoded) {
  return cl::Concept(cl::ConceptId{source, layer, name}, kind, std::move(members), tokens);
}

// ---------------------------------------------------------------------------
// Greedy Ward oracle
//
// Textbook agglomeration: at every step merge the live pair with the smallest
// key (cost, min id, max id) over all pairs. Costs are cached per pair and only
// the new cluster's row is recomputed. It follows the library's declared
// arithmetic (double centroids, four-lane squared distance, weight
// na*nb/(na+nb), merged centroid (na*ca + nb*cb)/(na+nb)) but shares no code
// with the nearest-neighbor-chain engine.
// ---------------------------------------------------------------------------

inline double oracle_sqdist(const std::vector<double>& a, const std::vector<double>& b) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double x = a[j] - b[j];
    lane[j % 4] += x * x;
  }
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

struct OracleResult {
  std::vector<cl::Merge> merges;
  /// partitions[k] = leaf -> representative (smallest leaf) with k clusters.
  std::map<std::size_t, std::vector<std::uint32_t>> partitions;
};

inline OracleResult greedy_ward_oracle(const std::vector<float>& points, std::size_t dim, bool record_partitions) {
  const std::size_t n = points.size() / dim;
  struct Cl {
    std::vector<double> c;
    std::size_t size;
    std::vector<std::uint32_t> leaves;
  };
  std::vector<Cl> clusters;  // indexed by cluster id
  std::vector<bool> live;
  for (std::size_t i = 0; i < n; ++i) {
    Cl c;
    c.c.assign(points.begin() + static_cast<std::ptrdiff_t>(i * dim),
               points.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim));
    c.size = 1;
    c.leaves = {static_cast<std::uint32_t>(i)};
    clusters.push_back(std::move(c));
    live.push_back(true);
  }
  auto cost = [&](std::size_t a, std::size_t b) {
    const double na = static_cast<double>(clusters[a].size);
    const double nb = static_cast<double>(clusters[b].size);
    return (na * nb / (na + nb)) * oracle_sqdist(clusters[a].c, clusters[b].c);
  };
  const std::size_t total = 2 * n - 1;
  std::vector<std::vector<double>> cache(total, std::vector<double>());
  for (std::size_t a = 0; a < n; ++a) {
    cache[a].assign(total, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t b = 0; b < a; ++b) cache[a][b] = cost(a, b);
  }
  OracleResult out;
  auto record = [&](std::size_t k) {
    if (!record_partitions) return;
    std::vector<std::uint32_t> rep(n);
    for (std::size_t id = 0; id < clusters.size(); ++id) {
      if (!live[id]) continue;
      const auto r = *std::min_element(clusters[id].leaves.begin(), clusters[id].leaves.end());
      for (auto leaf : clusters[id].leaves) rep[leaf] = r;
    }
    out.partitions[k] = std::move(rep);
  };
  record(n);
  std::vector<std::size_t> alive(n);  // ascending ids of live clusters
  for (std::size_t i = 0; i < n; ++i) alive[i] = i;
  for (std::size_t step = 0; step + 1 < n; ++step) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_lo = 0;
    std::size_t best_hi = 0;
    bool found = false;
    for (std::size_t j = 1; j < alive.size(); ++j) {
      const std::size_t hi = alive[j];
      const double* row = cache[hi].data();
      for (std::size_t i = 0; i < j; ++i) {
        const std::size_t lo = alive[i];
        const double c = row[lo];
        if (!found || c < best || (c == best && (lo < best_lo || (lo == best_lo && hi < best_hi)))) {
          best = c;
          best_lo = lo;
          best_hi = hi;
          found = true;
        }
      }
    }
    const double na = static_cast<double>(clusters[best_lo].size);
    const double nb = static_cast<double>(clusters[best_hi].size);
    Cl merged;
    merged.c.resize(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      merged.c[j] = (na * clusters[best_lo].c[j] + nb * clusters[best_hi].c[j]) / (na + nb);
    }
    merged.size = clusters[best_lo].size + clusters[best_hi].size;
    merged.leaves = clusters[best_lo].leaves;
    merged.leaves.insert(merged.leaves.end(), clusters[best_hi].leaves.begin(), clusters[best_hi].leaves.end());
    live[best_lo] = false;
    live[best_hi] = false;
    std::erase(alive, best_lo);
    std::erase(alive, best_hi);
    const std::size_t id = clusters.size();
    alive.push_back(id);
    clusters.push_back(std::move(merged));
    live.push_back(true);
    cache[id].assign(total, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t other = 0; other < id; ++other) {
      if (live[other]) cache[id][other] = cost(id, other);
    }
    out.merges.push_back(cl::Merge{static_cast<cl::ClusterId>(best_lo), static_cast<cl::ClusterId>(best_hi), best,
                                   static_cast<cl::ClusterId>(id)});
    record(n - step - 1);
  }
  return out;
}

/// Converts a library partition into the oracle's representative form.
inline std::vector<std::uint32_t> representatives(const cl::Partition& p) {
  std::vector<std::uint32_t> first(p.k, std::numeric_limits<std::uint32_t>::max());
  for (std::size_t leaf = 0; leaf < p.assignment.size(); ++leaf) {
    auto& f = first[p.assignment[leaf]];
    if (f == std::numeric_limits<std::uint32_t>::max()) f = static_cast<std::uint32_t>(leaf);
  }
  std::vector<std::uint32_t> rep(p.assignment.size());
  for (std::size_t leaf = 0; leaf < rep.size(); ++leaf) rep[leaf] = first[p.assignment[leaf]];
  return rep;
}

/// Brute-force sum of squared deviations from the mean, in long double.
inline long double sse(const std::vector<std::vector<double>>& pts) {
  if (pts.empty()) return 0.0L;
  const std::size_t d = pts.front().size();
  std::vector<long double> mean(d, 0.0L);
  for (const auto& p : pts) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += p[j];
  }
  for (auto& m : mean) m /= static_cast<long double>(pts.size());
  long double total = 0.0L;
  for (const auto& p : pts) {
    for (std::size_t j = 0; j < d; ++j) {
      const long double x = p[j] - mean[j];
      total += x * x;
    }
  }
  return total;
}

/// Random points drawn around a few centres (or pure noise when centres = 0).
inline std::vector<float> random_points(std::size_t n, std::size_t dim, std::uint64_t seed, std::size_t centres = 0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<double> c(std::max<std::size_t>(centres, 1) * dim);
  for (auto& v : c) v = g(rng) * 5.0;
  std::vector<float> pts(n * dim);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = centres == 0 ? 0 : rng() % centres;
    for (std::size_t j = 0; j < dim; ++j) {
      pts[i * dim + j] = static_cast<float>((centres == 0 ? 0.0 : c[k * dim + j]) + g(rng));
    }
  }
  return pts;
}

/// Exhaustive set-intersection overlap used as the alignment oracle.
inline double oracle_overlap(const std::set<cl::InstanceId>& a, const std::set<cl::InstanceId>& b) {
  std::size_t shared = 0;
  for (auto x : a) {
    for (auto y : b) {
      if (x == y) ++shared;
    }
  }
  return static_cast<double>(shared) / static_cast<double>(a.size());
}

}  // namespace testsupport

#include "conceptlens/clustering.hpp"

#include <tbb/blocked_range.h>
#include <tbb/parallel_reduce.h>
#include <tbb/task_arena.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <thread>
#include <tuple>
#include <unordered_map>

#include "jsonl.hpp"

namespace conceptlens {

namespace {

using detail::json;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kCheckEvery = 32;  // dimensions between early-abandon checks

// The lane helpers are always inlined, so the vector-argument ABI note
// does not apply.
#pragma GCC diagnostic push
#pragma GCC diagnostic ignored "-Wpsabi"

/// Four doubles, one per lane (lane = dimension mod 4). Element-wise
/// arithmetic keeps every lane's sum in the same order as a scalar loop.
typedef double Lanes __attribute__((vector_size(32)));

[[gnu::always_inline]] inline Lanes load_lanes(const double* p) noexcept {
  Lanes v;
  std::memcpy(&v, p, sizeof(v));
  return v;
}

[[gnu::always_inline]] inline double combine(Lanes s) noexcept { return (s[0] + s[1]) + (s[2] + s[3]); }

/// Squared distance with the canonical four-lane order. Returns +inf as soon
/// as weight * partial_sum > bound; partial sums only grow, so the abandoned
/// candidate's final cost is guaranteed to exceed `bound`.
[[gnu::always_inline]] inline double squared_distance_bounded(const double* a, const double* b, std::size_t dim,
                                                              double weight, double bound) noexcept {
  Lanes s = {0.0, 0.0, 0.0, 0.0};
  const std::size_t body = dim & ~std::size_t{3};
  std::size_t j = 0;
  while (j < body) {
    const std::size_t stop = std::min(body, j + kCheckEvery);
    for (; j < stop; j += 4) {
      const Lanes x = load_lanes(a + j) - load_lanes(b + j);
      s += x * x;
    }
    if (weight * combine(s) > bound) return kInf;
  }
  for (std::size_t t = 0; j + t < dim; ++t) {
    const double x = a[j + t] - b[j + t];
    s[t] += x * x;
  }
  return combine(s);
}

#pragma GCC diagnostic pop

std::size_t resolve_workers(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("CONCEPTLENS_WORKERS"); env != nullptr) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

struct Candidate {
  double cost = kInf;
  ClusterId lo = std::numeric_limits<ClusterId>::max();
  ClusterId hi = std::numeric_limits<ClusterId>::max();
};

constexpr ClusterId kDead = std::numeric_limits<ClusterId>::max();

/// Position of each cluster in greedy creation order. Leaves come first by
/// index. Merged clusters are ordered by merge cost, and clusters created at
/// equal cost by their position within that cost group. Greedy merges in
/// non-decreasing cost order, so this is the order in which the greedy
/// reference would have assigned ids, and it never changes for clusters that
/// already exist.
struct RankTable {
  std::size_t leaves = 0;
  const double* cost = nullptr;
  const std::uint32_t* pos = nullptr;

  [[nodiscard]] bool less(ClusterId a, ClusterId b) const noexcept {
    const bool la = a < leaves;
    const bool lb = b < leaves;
    if (la || lb) return la && lb ? a < b : la;
    if (cost[a] != cost[b]) return cost[a] < cost[b];
    return pos[a] < pos[b];
  }

  [[nodiscard]] Candidate pair(double c, ClusterId a, ClusterId b) const noexcept {
    return less(a, b) ? Candidate{c, a, b} : Candidate{c, b, a};
  }

  [[nodiscard]] bool better(const Candidate& x, const Candidate& y) const noexcept {
    if (x.cost != y.cost) return x.cost < y.cost;
    if (y.lo == kDead) return x.lo != kDead;
    if (x.lo == kDead) return false;
    if (x.lo != y.lo) return less(x.lo, y.lo);
    return x.hi != y.hi && less(x.hi, y.hi);
  }
};

/// Best candidate pairing `tip` with a live slot in [begin, end). Cloned for
/// AVX2; lanes are independent, so both clones give identical results.
[[gnu::target_clones("avx2", "default")]] Candidate scan_rows(const double* centroids, const std::size_t* sizes,
                                                               const ClusterId* ids, std::size_t dim,
                                                               std::uint32_t tip_slot, ClusterId tip,
                                                               std::size_t begin, std::size_t end, Candidate best,
                                                               const RankTable& rank) {
  const double* tc = centroids + tip_slot * dim;
  const double na = static_cast<double>(sizes[tip_slot]);
  for (std::size_t s = begin; s < end; ++s) {
    const ClusterId id = ids[s];
    if (id == kDead || s == tip_slot) continue;
    const double nb = static_cast<double>(sizes[s]);
    const double w = na * nb / (na + nb);  // ward_weight
    const double sq = squared_distance_bounded(tc, centroids + s * dim, dim, w, best.cost);
    if (sq == kInf) continue;
    const double c = w * sq;
    if (c < best.cost) {
      best = rank.pair(c, tip, id);
    } else if (c == best.cost) {
      const Candidate cand = rank.pair(c, tip, id);
      if (rank.better(cand, best)) best = cand;
    }
  }
  return best;
}

/// Nearest-neighbor-chain agglomeration over slot-indexed live clusters.
/// Dead slots are compacted away once they outnumber the live ones so
/// scans stay contiguous.
class NnChainWard {
 public:
  NnChainWard(std::span<const float> points, std::size_t n, std::size_t dim, bool unit_normalize, std::size_t workers)
      : n_(n),
        dim_(dim),
        workers_(workers),
        centroids_(n * dim),
        sizes_(n, 1),
        ids_(n),
        slot_of_(n == 0 ? 0 : 2 * n - 1, kNoSlot),
        rank_cost_(slot_of_.size(), -kInf),
        rank_pos_(slot_of_.size(), 0),
        children_(n == 0 ? 0 : n - 1) {
    for (std::size_t i = 0; i < n; ++i) {
      double* row = &centroids_[i * dim];
      for (std::size_t j = 0; j < dim; ++j) row[j] = static_cast<double>(points[i * dim + j]);
      if (unit_normalize) {
        double norm = 0.0;
        for (std::size_t j = 0; j < dim; ++j) norm += row[j] * row[j];
        norm = std::sqrt(norm);
        if (norm > 0.0) {
          for (std::size_t j = 0; j < dim; ++j) row[j] /= norm;
        }
      }
      ids_[i] = static_cast<ClusterId>(i);
      slot_of_[i] = static_cast<std::uint32_t>(i);
    }
    used_ = n;
    live_ = n;
  }

  std::vector<Merge> run() {
    std::vector<Merge> merges;
    if (n_ < 2) return merges;
    merges.reserve(n_ - 1);
    std::vector<ClusterId> chain;
    chain.reserve(64);
    std::optional<tbb::task_arena> arena;
    if (workers_ > 1) arena.emplace(static_cast<int>(workers_));

    while (merges.size() + 1 < n_) {
      if (chain.empty()) chain.push_back(first_live());
      const ClusterId tip = chain.back();
      const std::optional<ClusterId> prev =
          chain.size() >= 2 ? std::optional<ClusterId>(chain[chain.size() - 2]) : std::nullopt;
      const Candidate best = arena ? arena->execute([&] { return nearest(tip, prev, true); }) : nearest(tip, prev, false);
      const ClusterId nn = best.lo == tip ? best.hi : best.lo;
      if (prev && nn == *prev) {
        chain.pop_back();
        chain.pop_back();
        merges.push_back(merge(tip, nn, best.cost, static_cast<ClusterId>(n_ + merges.size())));
      } else {
        chain.push_back(nn);
      }
    }
    return merges;
  }

 private:
  static constexpr std::uint32_t kNoSlot = std::numeric_limits<std::uint32_t>::max();
  static constexpr std::size_t kParallelThreshold = 8192;
  static constexpr std::size_t kGrain = 2048;

  [[nodiscard]] const double* centroid(std::uint32_t slot) const noexcept { return &centroids_[slot * dim_]; }

  ClusterId first_live() const {
    for (std::size_t s = 0; s < used_; ++s) {
      if (ids_[s] != kDead) return ids_[s];
    }
    return kDead;
  }

  Candidate scan(std::uint32_t tip_slot, ClusterId tip, std::size_t begin, std::size_t end, Candidate best) const {
    return scan_rows(centroids_.data(), sizes_.data(), ids_.data(), dim_, tip_slot, tip, begin, end, best, rank_);
  }

  Candidate nearest(ClusterId tip, std::optional<ClusterId> prev, bool parallel) const {
    const std::uint32_t tip_slot = slot_of_[tip];
    Candidate best;
    if (prev) {
      const std::uint32_t ps = slot_of_[*prev];
      const double w = ward_weight(sizes_[tip_slot], sizes_[ps]);
      best = rank_.pair(w * squared_distance_bounded(centroid(tip_slot), centroid(ps), dim_, w, kInf), tip, *prev);
    }
    if (!parallel || used_ < kParallelThreshold) {
      return scan(tip_slot, tip, 0, used_, best);
    }
    return tbb::parallel_reduce(
        tbb::blocked_range<std::size_t>(0, used_, kGrain), best,
        [&](const tbb::blocked_range<std::size_t>& r, Candidate local) {
          return scan(tip_slot, tip, r.begin(), r.end(), local);
        },
        [this](const Candidate& a, const Candidate& b) { return rank_.better(a, b) ? a : b; });
  }

  Merge merge(ClusterId a, ClusterId b, double cost, ClusterId new_id) {
    const std::uint32_t sa = slot_of_[a];
    const std::uint32_t sb = slot_of_[b];
    const std::uint32_t keep = std::min(sa, sb);
    const std::uint32_t drop = std::max(sa, sb);
    merge_centroids(sizes_[keep], {centroid(keep), dim_}, sizes_[drop], {centroid(drop), dim_}, scratch_);
    std::copy(scratch_.begin(), scratch_.end(), &centroids_[keep * dim_]);
    sizes_[keep] += sizes_[drop];
    ids_[keep] = new_id;
    ids_[drop] = kDead;
    slot_of_[a] = kNoSlot;
    slot_of_[b] = kNoSlot;
    slot_of_[new_id] = keep;
    --live_;
    if (live_ * 2 < used_ && used_ > 1024) compact();
    place(new_id, a, b, cost);
    return Merge{std::min(a, b), std::max(a, b), cost, new_id};
  }

  /// Assigns `id` its greedy rank. Within one cost group the greedy order is
  /// found by replaying the group: a member is ready once its in-group
  /// children are placed, and the ready member with the smallest
  /// (rank of lower child, rank of higher child) goes next.
  void place(ClusterId id, ClusterId a, ClusterId b, double cost) {
    if (rank_.less(b, a)) std::swap(a, b);
    children_[id - n_] = {a, b};
    const double group_cost = std::max({cost, rank_cost_[a], rank_cost_[b]});
    rank_cost_[id] = group_cost;
    auto& group = groups_[group_cost];
    group.push_back(id);
    if (group.size() == 1) {
      rank_pos_[id] = 0;
      return;
    }
    auto in_group = [&](ClusterId c) { return c >= n_ && rank_cost_[c] == group_cost; };
    std::unordered_map<ClusterId, std::vector<ClusterId>> waiting;  // in-group child -> parents
    std::unordered_map<ClusterId, int> pending;
    for (ClusterId m : group) {
      for (ClusterId c : children_[m - n_]) {
        if (in_group(c)) {
          waiting[c].push_back(m);
          ++pending[m];
        }
      }
    }
    // Ranks of placed in-group children are final before a parent is queued.
    auto later = [&](ClusterId x, ClusterId y) {
      const auto& cx = children_[x - n_];
      const auto& cy = children_[y - n_];
      if (cx[0] != cy[0]) return rank_.less(cy[0], cx[0]);
      return rank_.less(cy[1], cx[1]);
    };
    std::priority_queue<ClusterId, std::vector<ClusterId>, decltype(later)> ready(later);
    auto push = [&](ClusterId m) {
      auto& ch = children_[m - n_];
      if (rank_.less(ch[1], ch[0])) std::swap(ch[0], ch[1]);
      ready.push(m);
    };
    for (ClusterId m : group) {
      if (pending[m] == 0) push(m);
    }
    std::uint32_t next = 0;
    while (!ready.empty()) {
      const ClusterId m = ready.top();
      ready.pop();
      rank_pos_[m] = next++;
      if (auto it = waiting.find(m); it != waiting.end()) {
        for (ClusterId parent : it->second) {
          if (--pending[parent] == 0) push(parent);
        }
      }
    }
  }

  void compact() {
    std::size_t out = 0;
    for (std::size_t s = 0; s < used_; ++s) {
      if (ids_[s] == kDead) continue;
      if (out != s) {
        std::copy_n(&centroids_[s * dim_], dim_, &centroids_[out * dim_]);
        sizes_[out] = sizes_[s];
        ids_[out] = ids_[s];
      }
      slot_of_[ids_[out]] = static_cast<std::uint32_t>(out);
      ++out;
    }
    used_ = out;
  }

  std::size_t n_;
  std::size_t dim_;
  std::size_t workers_;
  std::vector<double> centroids_;
  std::vector<std::size_t> sizes_;
  std::vector<ClusterId> ids_;
  std::vector<std::uint32_t> slot_of_;
  std::vector<double> rank_cost_;
  std::vector<std::uint32_t> rank_pos_;
  std::vector<std::array<ClusterId, 2>> children_;
  std::map<double, std::vector<ClusterId>> groups_;
  RankTable rank_{n_, rank_cost_.data(), rank_pos_.data()};
  std::vector<double> scratch_ = std::vector<double>(dim_);
  std::size_t used_ = 0;
  std::size_t live_ = 0;
};

/// Re-emits the tree in the order the greedy procedure would merge it:
/// repeatedly take the cheapest merge whose children both exist, ties by
/// (min_id, max_id) of the renumbered children.
Dendrogram replay_greedy_order(const std::vector<Merge>& raw, std::size_t n) {
  Dendrogram out;
  out.leaf_count = n;
  out.merges.reserve(raw.size());
  const std::size_t total = n + raw.size();
  std::vector<ClusterId> canonical(total, std::numeric_limits<ClusterId>::max());
  for (std::size_t i = 0; i < n; ++i) canonical[i] = static_cast<ClusterId>(i);
  std::vector<std::size_t> parent(total, raw.size());
  std::vector<int> pending(raw.size(), 0);
  for (std::size_t k = 0; k < raw.size(); ++k) {
    for (ClusterId child : {raw[k].left, raw[k].right}) {
      parent[child] = k;
      if (child >= n) ++pending[k];
    }
  }
  using Key = std::tuple<double, ClusterId, ClusterId, std::size_t>;
  std::priority_queue<Key, std::vector<Key>, std::greater<>> ready;
  auto push_ready = [&](std::size_t k) {
    const ClusterId a = canonical[raw[k].left];
    const ClusterId b = canonical[raw[k].right];
    ready.emplace(raw[k].cost, std::min(a, b), std::max(a, b), k);
  };
  for (std::size_t k = 0; k < raw.size(); ++k) {
    if (pending[k] == 0) push_ready(k);
  }
  while (!ready.empty()) {
    const auto [cost, lo, hi, k] = ready.top();
    ready.pop();
    const auto id = static_cast<ClusterId>(n + out.merges.size());
    out.merges.push_back(Merge{lo, hi, cost, id});
    canonical[raw[k].id] = id;
    const std::size_t p = parent[raw[k].id];
    if (p < raw.size() && --pending[p] == 0) push_ready(p);
  }
  return out;
}

}  // namespace

ClusterState ClusterState::singleton(std::span<const float> point, InstanceId index) {
  ClusterState s;
  s.centroid.assign(point.begin(), point.end());
  s.size = 1;
  s.member_indices = {index};
  return s;
}

ClusterState ClusterState::from_points(std::span<const std::span<const float>> points,
                                       std::span<const InstanceId> indices) {
  if (points.empty() || points.size() != indices.size()) {
    throw Error(ErrorCode::kInvalidArgument, "cluster needs one index per point and at least one point");
  }
  ClusterState s;
  const std::size_t dim = points.front().size();
  s.centroid.assign(dim, 0.0);
  for (const auto& p : points) {
    if (p.size() != dim) throw Error(ErrorCode::kDimensionMismatch, "points differ in dimension");
    for (std::size_t j = 0; j < dim; ++j) s.centroid[j] += static_cast<double>(p[j]);
  }
  for (auto& v : s.centroid) v /= static_cast<double>(points.size());
  s.size = points.size();
  s.member_indices.assign(indices.begin(), indices.end());
  return s;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "dimensions " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  return squared_distance_bounded(a.data(), b.data(), a.size(), 1.0, kInf);
}

double ward_weight(std::size_t size_a, std::size_t size_b) noexcept {
  const double na = static_cast<double>(size_a);
  const double nb = static_cast<double>(size_b);
  return na * nb / (na + nb);
}

double ward_cost(std::size_t size_a, std::span<const double> centroid_a, std::size_t size_b,
                 std::span<const double> centroid_b) {
  return ward_weight(size_a, size_b) * squared_distance(centroid_a, centroid_b);
}

double ward_distance(const ClusterState& a, const ClusterState& b) {
  if (a.size == 0 || b.size == 0) {
    throw Error(ErrorCode::kInvalidArgument, "clusters must be non-empty");
  }
  return ward_cost(a.size, a.centroid, b.size, b.centroid);
}

void merge_centroids(std::size_t size_a, std::span<const double> centroid_a, std::size_t size_b,
                     std::span<const double> centroid_b, std::span<double> out) {
  if (centroid_a.size() != centroid_b.size() || out.size() != centroid_a.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "centroid dimensions differ");
  }
  const double na = static_cast<double>(size_a);
  const double nb = static_cast<double>(size_b);
  const double total = na + nb;
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = (na * centroid_a[j] + nb * centroid_b[j]) / total;
}

ClusterState merge(const ClusterState& a, const ClusterState& b) {
  ClusterState out;
  out.centroid.resize(a.centroid.size());
  merge_centroids(a.size, a.centroid, b.size, b.centroid, out.centroid);
  out.size = a.size + b.size;
  out.member_indices = a.member_indices;
  out.member_indices.insert(out.member_indices.end(), b.member_indices.begin(), b.member_indices.end());
  std::sort(out.member_indices.begin(), out.member_indices.end());
  return out;
}

Dendrogram ward_dendrogram(std::span<const float> points, std::size_t dim, const ClusterOptions& options) {
  if (dim == 0 || points.size() % dim != 0) {
    throw Error(ErrorCode::kDimensionMismatch, "point buffer is not a multiple of dim");
  }
  const std::size_t n = points.size() / dim;
  NnChainWard engine(points, n, dim, options.unit_normalize, resolve_workers(options.workers));
  return replay_greedy_order(engine.run(), n);
}

Dendrogram ward_dendrogram(const InstanceView& view, const ClusterOptions& options) {
  const std::size_t n = view.size();
  const std::size_t dim = view.dim();
  std::vector<float> points;
  points.reserve(n * dim);
  for (std::size_t k = 0; k < n; ++k) {
    const auto row = view.vector(k);
    points.insert(points.end(), row.begin(), row.end());
  }
  return ward_dendrogram(points, dim, options);
}

Partition cut(const Dendrogram& dendrogram, std::size_t k) {
  const std::size_t n = dendrogram.leaf_count;
  const std::size_t min_k = n - std::min(n, dendrogram.merges.size());
  if (k < 1 || k > n || k < min_k) {
    throw Error(ErrorCode::kKOutOfRange,
                "k=" + std::to_string(k) + " outside [" + std::to_string(std::max<std::size_t>(1, min_k)) + ", " +
                    std::to_string(n) + "]");
  }
  const std::size_t apply = n - k;
  std::vector<ClusterId> parent(n + apply);
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = static_cast<ClusterId>(i);
  for (std::size_t m = 0; m < apply; ++m) {
    const Merge& merge = dendrogram.merges[m];
    if (merge.id != n + m || merge.left >= merge.id || merge.right >= merge.id) {
      throw Error(ErrorCode::kMalformedInput, "merge " + std::to_string(m) + " has inconsistent ids");
    }
    parent[merge.left] = merge.id;
    parent[merge.right] = merge.id;
  }
  auto root = [&](ClusterId x) {
    ClusterId r = x;
    while (parent[r] != r) r = parent[r];
    while (parent[x] != r) {
      const ClusterId next = parent[x];
      parent[x] = r;
      x = next;
    }
    return r;
  };
  Partition p;
  p.k = k;
  p.assignment.resize(n);
  std::vector<std::uint32_t> label_of(parent.size(), std::numeric_limits<std::uint32_t>::max());
  std::uint32_t next = 0;
  for (std::size_t leaf = 0; leaf < n; ++leaf) {
    const ClusterId r = root(static_cast<ClusterId>(leaf));
    if (label_of[r] == std::numeric_limits<std::uint32_t>::max()) label_of[r] = next++;
    p.assignment[leaf] = label_of[r];
  }
  return p;
}

LayerClustering cluster_layer(const InstanceView& view, std::size_t k, const ClusterOptions& options) {
  if (k < 1 || k > view.size()) {
    throw Error(ErrorCode::kKOutOfRange, "k=" + std::to_string(k) + " outside [1, " + std::to_string(view.size()) + "]");
  }
  LayerClustering out;
  out.dendrogram = ward_dendrogram(view, options);
  out.partition = cut(out.dendrogram, k);
  return out;
}

ConceptInventory partition_to_concepts(const Partition& partition, const InstanceView& view, const Dataset& dataset,
                                       const std::string& source, int layer) {
  if (partition.assignment.size() != view.size()) {
    throw Error(ErrorCode::kInvalidArgument, "partition does not cover the view");
  }
  std::vector<std::vector<InstanceId>> members(partition.k);
  for (std::size_t pos = 0; pos < view.size(); ++pos) {
    const auto label = partition.assignment[pos];
    if (label >= partition.k) throw Error(ErrorCode::kInvalidArgument, "label out of range");
    members[label].push_back(view.global_index(pos));
  }
  ConceptInventory inventory(dataset.size(), instance_space_hash(dataset));
  for (std::size_t label = 0; label < members.size(); ++label) {
    if (members[label].empty()) continue;
    inventory.add(Concept(ConceptId{source, layer, "c" + std::to_string(label)}, ConceptKind::kEncoded,
                          std::move(members[label]), dataset.tokens()));
  }
  inventory.parameters["k"] = std::to_string(partition.k);
  inventory.parameters["layer"] = std::to_string(layer);
  return inventory;
}

std::string dendrogram_file_name(int layer) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "dendrogram_layer%02d.jsonl", layer);
  return buf;
}

void write_dendrogram(const std::filesystem::path& path, const Dendrogram& dendrogram, const Provenance& provenance) {
  auto out = detail::open_for_write(path);
  json header = json::parse(provenance.json_line());
  header["provenance"]["leaf_count"] = dendrogram.leaf_count;
  out << header.dump() << '\n';
  for (const auto& m : dendrogram.merges) {
    out << json{{"l", m.left}, {"r", m.right}, {"cost", m.cost}, {"id", m.id}}.dump() << '\n';
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

Dendrogram read_dendrogram(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::kMissingUpstreamArtifact, path.string());
  }
  Dendrogram d;
  std::optional<std::size_t> leaf_count;
  detail::for_each_jsonl(
      path,
      [&](const json& obj, std::size_t) {
        d.merges.push_back(Merge{obj.at("l").get<ClusterId>(), obj.at("r").get<ClusterId>(), obj.at("cost").get<double>(),
                                 obj.at("id").get<ClusterId>()});
      },
      [&](const json& header) {
        if (header.contains("leaf_count")) leaf_count = header.at("leaf_count").get<std::size_t>();
      });
  d.leaf_count = leaf_count.value_or(d.merges.size() + 1);
  return d;
}

}  // namespace conceptlens

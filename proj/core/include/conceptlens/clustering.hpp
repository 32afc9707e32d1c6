#pragma once

/** \file clustering.hpp
 *  \brief Ward-linkage agglomerative clustering without a distance matrix.
 *
 *  Clusters are merged with the nearest-neighbor-chain algorithm. Ward's
 *  criterion is reducible, so the chain yields the same hierarchy as the
 *  greedy "merge the cheapest pair" procedure while keeping only the live
 *  centroids in memory (O(n*d + n)).
 *
 *  Merge candidates are ordered by the key (cost, min_id, max_id). Cluster
 *  ids follow creation order: leaves 0..n-1, merges n..2n-2. The reported
 *  dendrogram is replayed into the order the greedy procedure would produce
 *  under that key, so ids and merge order are reproducible bit for bit.
 *
 *  Centroids and costs are accumulated in double precision over float32
 *  input. The squared distance uses four interleaved accumulators
 *  (lane = dimension mod 4) combined as (s0 + s1) + (s2 + s3).
 */

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "conceptlens/concepts.hpp"
#include "conceptlens/embedding_store.hpp"
#include "conceptlens/provenance.hpp"

namespace conceptlens {

using ClusterId = std::uint32_t;

struct ClusterState {
  std::vector<double> centroid;
  std::size_t size = 0;
  std::vector<InstanceId> member_indices;

  /// Singleton cluster holding one point.
  static ClusterState singleton(std::span<const float> point, InstanceId index);
  /// Cluster of several points; centroid is their mean.
  static ClusterState from_points(std::span<const std::span<const float>> points, std::span<const InstanceId> indices);
};

/// Squared Euclidean distance with the fixed four-lane summation order.
double squared_distance(std::span<const double> a, std::span<const double> b);

/// |A||B|/(|A|+|B|) as used by the centroid form of Ward's criterion.
double ward_weight(std::size_t size_a, std::size_t size_b) noexcept;

/// Increase in within-cluster sum of squares caused by merging A and B:
/// |A||B|/(|A|+|B|) * ||mu_A - mu_B||^2.
double ward_cost(std::size_t size_a, std::span<const double> centroid_a, std::size_t size_b,
                 std::span<const double> centroid_b);

/// Ward distance between two clusters. Throws DimensionMismatch.
double ward_distance(const ClusterState& a, const ClusterState& b);

/// Merged centroid (|A| mu_A + |B| mu_B) / (|A| + |B|), written into `out`.
void merge_centroids(std::size_t size_a, std::span<const double> centroid_a, std::size_t size_b,
                     std::span<const double> centroid_b, std::span<double> out);

ClusterState merge(const ClusterState& a, const ClusterState& b);

struct Merge {
  ClusterId left = 0;   ///< smaller of the two merged ids
  ClusterId right = 0;  ///< larger of the two merged ids
  double cost = 0.0;
  ClusterId id = 0;     ///< id of the new cluster

  bool operator==(const Merge&) const = default;
};

struct Dendrogram {
  std::vector<Merge> merges;
  std::size_t leaf_count = 0;

  bool operator==(const Dendrogram&) const = default;
};

/// Cluster label per leaf (view position); labels 0..k-1 are assigned in
/// ascending order of each cluster's smallest leaf.
struct Partition {
  std::vector<std::uint32_t> assignment;
  std::size_t k = 0;

  bool operator==(const Partition&) const = default;
};

struct ClusterOptions {
  /// Scale every input vector to unit length before clustering.
  bool unit_normalize = false;
  /// Worker threads for the nearest-neighbor scans; 0 uses the
  /// CONCEPTLENS_WORKERS environment variable, else the hardware count.
  std::size_t workers = 0;
};

/// Full Ward agglomeration of row-major float32 points.
Dendrogram ward_dendrogram(std::span<const float> points, std::size_t dim, const ClusterOptions& options = {});

/// Full Ward agglomeration of the view's vectors (leaf i = view position i).
Dendrogram ward_dendrogram(const InstanceView& view, const ClusterOptions& options = {});

/// Partition obtained by undoing the last k-1 merges. Throws KOutOfRange.
Partition cut(const Dendrogram& dendrogram, std::size_t k);

struct LayerClustering {
  Dendrogram dendrogram;
  Partition partition;
};

/// Clusters one layer into k concepts. Throws KOutOfRange unless 1 <= k <= n.
LayerClustering cluster_layer(const InstanceView& view, std::size_t k, const ClusterOptions& options = {});

/// One encoded concept per cluster, named "c{label}".
ConceptInventory partition_to_concepts(const Partition& partition, const InstanceView& view, const Dataset& dataset,
                                       const std::string& source, int layer);

/// `dendrogram_layer{NN}.jsonl`
std::string dendrogram_file_name(int layer);

void write_dendrogram(const std::filesystem::path& path, const Dendrogram& dendrogram,
                      const Provenance& provenance = {});
Dendrogram read_dendrogram(const std::filesystem::path& path);

}  // namespace conceptlens

#pragma once

#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "smanon/graph.hpp"

namespace smanon {

struct PartitionSpec {
  int k = 3;                       // target cluster size m
  std::optional<int> n_clusters;   // N_C; floor(N / k) when absent
};

/// Clusters hold node indices of the partitioned graph.
struct Partition {
  std::vector<std::vector<int>> clusters;
  /// False when an exact method stopped at its time limit with an incumbent.
  bool optimal = true;

  std::vector<int> sizes() const;
  /// Clusters sorted internally and ordered by smallest member.
  Partition canonical() const;
};

struct PartitionQuality {
  long unbalance = 0;
  double intra_weight = 0.0;
  double wall_time_s = 0.0;
};

/// Throws Error unless the clusters are non-empty, disjoint, and cover all `n` nodes.
void check_partition(const Partition& p, int n);

/// Sum of weights over co-clustered connected pairs.
double intra_weight(const Partition& p, const SimilarityGraph& g);

PartitionQuality quality(const Partition& p, const SimilarityGraph& g, int k);

struct IpOptions {
  double time_limit_s = 10.0;
  int max_nodes = 40;
};

/// Exact balanced partition minimising intra-cluster weight: N_C clusters, each of size
/// floor(N / N_C) or one more, unconnected pairs never together. Branch-and-bound over cluster
/// assignments; on timeout the best incumbent is returned with `optimal == false`.
Partition ip_partition(const SimilarityGraph& g, const PartitionSpec& spec, const IpOptions& opts = {});

/// Degree (edge count) on the diagonal minus the weighted adjacency.
Eigen::MatrixXd laplacian(const SimilarityGraph& g);

struct EigenInfo {
  double lambda_max = 0.0;
  Eigen::VectorXd vector;
};

/// One spectral cut: nodes whose entry in the top Laplacian eigenvector is at or above the
/// median form the first side (ties by ascending index until it holds ceil(N/2) nodes).
std::pair<Partition, EigenInfo> sgp_cut(const SimilarityGraph& g);

/// Successive spectral cuts until every piece has fewer than 2k nodes.
Partition sgp_partition(const SimilarityGraph& g, int k);

/// Recursive spectral partition: pieces with 3k <= N < 4k are finished exactly by
/// ip_partition, pieces with N >= 2k are cut again, smaller pieces become clusters.
Partition rsgp(const SimilarityGraph& g, int k, double ip_time_limit_s = 10.0);

}  // namespace smanon

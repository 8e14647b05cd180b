#pragma once

#include <span>
#include <string_view>
#include <tuple>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "smanon/error.hpp"

namespace smanon {

using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Undirected weighted record graph stored densely: `weights(u, v)` is meaningful only where
/// `edges(u, v)` is set. The diagonal is never an edge.
struct SimilarityGraph {
  std::vector<std::string> node_ids;
  Eigen::MatrixXd weights;
  BoolMatrix edges;

  static SimilarityGraph complete(std::vector<std::string> ids, Eigen::MatrixXd weights);
  /// Sparse construction from an edge list over `n` nodes named by index.
  static SimilarityGraph from_edges(std::vector<std::string> ids,
                                    std::span<const std::tuple<int, int, double>> edge_list);

  int size() const { return static_cast<int>(node_ids.size()); }
  bool connected(int u, int v) const { return edges(u, v); }
  int edge_count() const;
  bool is_complete() const;

  SimilarityGraph induced(std::span<const int> nodes) const;

  /// Throws Error on self-edges, asymmetry, or non-finite/negative weights.
  void validate() const;
};

/// Connected components, each sorted ascending; components ordered by smallest member.
std::vector<std::vector<int>> connected_components(const SimilarityGraph& g);

/// Edge-list text: one `u v weight` triple per line, node labels are arbitrary tokens.
SimilarityGraph parse_edge_list(std::string_view text);

}  // namespace smanon

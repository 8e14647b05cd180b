#pragma once

#include <vector>

namespace smanon {

/// Min-cost flow by successive shortest paths (Dijkstra with Johnson potentials). Costs must be
/// non-negative on the initial graph.
class MinCostFlow {
 public:
  explicit MinCostFlow(int n_nodes);

  /// Returns the arc index, usable with flow().
  int add_arc(int from, int to, int capacity, double cost);

  struct Result {
    int flow = 0;
    double cost = 0.0;
  };
  /// Sends up to `max_flow` units from source to sink along cheapest augmenting paths.
  Result solve(int source, int sink, int max_flow);

  int flow(int arc) const;

 private:
  struct Arc {
    int to;
    int rev;
    int cap;
    double cost;
  };
  std::vector<std::vector<Arc>> adj_;
  std::vector<std::pair<int, int>> arcs_;  // (node, position) of each forward arc
  std::vector<int> initial_cap_;
};

}  // namespace smanon

#pragma once

// Exhaustive minimum-weight balanced partition by restricted-growth enumeration. Test use only.

#include <functional>
#include <limits>
#include <vector>

#include "smanon/graph.hpp"

namespace oracle {

struct BestPartition {
  double cost = std::numeric_limits<double>::infinity();
  std::vector<int> label;
  long feasible = 0;
};

inline BestPartition enumerate_balanced(const smanon::SimilarityGraph& g, int n_clusters) {
  const int n = g.size();
  const int m = n / n_clusters;
  BestPartition best;
  std::vector<int> label(static_cast<std::size_t>(n), -1), size(static_cast<std::size_t>(n_clusters), 0);

  std::function<void(int, int)> rec = [&](int u, int used) {
    if (u == n) {
      if (used != n_clusters) return;
      for (int c = 0; c < n_clusters; ++c)
        if (size[static_cast<std::size_t>(c)] < m || size[static_cast<std::size_t>(c)] > m + 1) return;
      double cost = 0.0;
      for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
          if (label[static_cast<std::size_t>(a)] == label[static_cast<std::size_t>(b)]) {
            if (!g.connected(a, b)) return;
            cost += g.weights(a, b);
          }
      ++best.feasible;
      if (cost < best.cost) {
        best.cost = cost;
        best.label = label;
      }
      return;
    }
    for (int c = 0; c <= used && c < n_clusters; ++c) {
      if (size[static_cast<std::size_t>(c)] == m + 1) continue;
      label[static_cast<std::size_t>(u)] = c;
      ++size[static_cast<std::size_t>(c)];
      rec(u + 1, c == used ? used + 1 : used);
      --size[static_cast<std::size_t>(c)];
    }
    label[static_cast<std::size_t>(u)] = -1;
  };
  rec(0, 0);
  return best;
}

/// All balanced bipartitions (side sizes floor/ceil of n/2) with their cut weight.
inline std::vector<double> bipartition_cuts(const smanon::SimilarityGraph& g) {
  const int n = g.size();
  std::vector<double> cuts;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    const int ones = __builtin_popcount(mask);
    if (ones != (n + 1) / 2) continue;
    double cut = 0.0;
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b)
        if (((mask >> a) & 1u) != ((mask >> b) & 1u) && g.connected(a, b)) cut += g.weights(a, b);
    cuts.push_back(cut);
  }
  return cuts;
}

}  // namespace oracle

#include "smanon/mincost_flow.hpp"

#include <functional>
#include <limits>
#include <queue>

#include "smanon/error.hpp"

namespace smanon {

MinCostFlow::MinCostFlow(int n_nodes) : adj_(static_cast<std::size_t>(n_nodes)) {}

int MinCostFlow::add_arc(int from, int to, int capacity, double cost) {
  if (cost < 0.0) throw Error("min-cost flow arcs need non-negative cost");
  auto& a = adj_[static_cast<std::size_t>(from)];
  auto& b = adj_[static_cast<std::size_t>(to)];
  a.push_back({to, static_cast<int>(b.size()), capacity, cost});
  b.push_back({from, static_cast<int>(a.size()) - 1, 0, -cost});
  arcs_.emplace_back(from, static_cast<int>(a.size()) - 1);
  initial_cap_.push_back(capacity);
  return static_cast<int>(arcs_.size()) - 1;
}

int MinCostFlow::flow(int arc) const {
  const auto [node, pos] = arcs_[static_cast<std::size_t>(arc)];
  return initial_cap_[static_cast<std::size_t>(arc)] -
         adj_[static_cast<std::size_t>(node)][static_cast<std::size_t>(pos)].cap;
}

MinCostFlow::Result MinCostFlow::solve(int source, int sink, int max_flow) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const std::size_t n = adj_.size();
  std::vector<double> potential(n, 0.0), dist(n);
  std::vector<int> prev_node(n), prev_arc(n);
  Result res;

  using Entry = std::pair<double, int>;
  while (res.flow < max_flow) {
    std::fill(dist.begin(), dist.end(), kInf);
    dist[static_cast<std::size_t>(source)] = 0.0;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> pq;
    pq.emplace(0.0, source);
    while (!pq.empty()) {
      auto [d, u] = pq.top();
      pq.pop();
      if (d > dist[static_cast<std::size_t>(u)]) continue;
      const auto& arcs = adj_[static_cast<std::size_t>(u)];
      for (std::size_t i = 0; i < arcs.size(); ++i) {
        const Arc& a = arcs[i];
        if (a.cap <= 0) continue;
        // Reduced costs are non-negative up to round-off.
        const double rc = std::max(0.0, a.cost + potential[static_cast<std::size_t>(u)] -
                                             potential[static_cast<std::size_t>(a.to)]);
        const double nd = d + rc;
        if (nd < dist[static_cast<std::size_t>(a.to)]) {
          dist[static_cast<std::size_t>(a.to)] = nd;
          prev_node[static_cast<std::size_t>(a.to)] = u;
          prev_arc[static_cast<std::size_t>(a.to)] = static_cast<int>(i);
          pq.emplace(nd, a.to);
        }
      }
    }
    if (dist[static_cast<std::size_t>(sink)] == kInf) break;
    for (std::size_t v = 0; v < n; ++v)
      if (dist[v] < kInf) potential[v] += dist[v];

    int push = max_flow - res.flow;
    for (int v = sink; v != source; v = prev_node[static_cast<std::size_t>(v)])
      push = std::min(push, adj_[static_cast<std::size_t>(prev_node[static_cast<std::size_t>(v)])]
                                [static_cast<std::size_t>(prev_arc[static_cast<std::size_t>(v)])]
                                    .cap);
    for (int v = sink; v != source; v = prev_node[static_cast<std::size_t>(v)]) {
      Arc& a = adj_[static_cast<std::size_t>(prev_node[static_cast<std::size_t>(v)])]
                   [static_cast<std::size_t>(prev_arc[static_cast<std::size_t>(v)])];
      a.cap -= push;
      adj_[static_cast<std::size_t>(v)][static_cast<std::size_t>(a.rev)].cap += push;
      res.cost += push * a.cost;
    }
    res.flow += push;
  }
  return res;
}

}  // namespace smanon

#include "smanon/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <tuple>

namespace smanon {

SimilarityGraph SimilarityGraph::complete(std::vector<std::string> ids, Eigen::MatrixXd weights) {
  const auto n = static_cast<Eigen::Index>(ids.size());
  if (weights.rows() != n || weights.cols() != n)
    throw Error("weight matrix shape does not match node count");
  SimilarityGraph g{std::move(ids), std::move(weights), BoolMatrix::Constant(n, n, true)};
  g.edges.matrix().diagonal().setConstant(false);
  g.weights.diagonal().setZero();
  return g;
}

SimilarityGraph SimilarityGraph::from_edges(
    std::vector<std::string> ids, std::span<const std::tuple<int, int, double>> edge_list) {
  const auto n = static_cast<Eigen::Index>(ids.size());
  SimilarityGraph g{std::move(ids), Eigen::MatrixXd::Zero(n, n), BoolMatrix::Constant(n, n, false)};
  for (const auto& [u, v, w] : edge_list) {
    if (u < 0 || v < 0 || u >= n || v >= n) throw Error("edge references unknown node");
    if (u == v) throw Error("self-edges are not allowed");
    g.weights(u, v) = g.weights(v, u) = w;
    g.edges(u, v) = g.edges(v, u) = true;
  }
  g.validate();
  return g;
}

int SimilarityGraph::edge_count() const { return static_cast<int>(edges.count() / 2); }

bool SimilarityGraph::is_complete() const {
  const auto n = static_cast<long>(size());
  return static_cast<long>(edges.count()) == n * (n - 1);
}

SimilarityGraph SimilarityGraph::induced(std::span<const int> nodes) const {
  const auto n = static_cast<Eigen::Index>(nodes.size());
  SimilarityGraph sub;
  sub.node_ids.reserve(nodes.size());
  sub.weights.resize(n, n);
  sub.edges.resize(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    sub.node_ids.push_back(node_ids[static_cast<std::size_t>(nodes[a])]);
    for (Eigen::Index b = 0; b < n; ++b) {
      sub.weights(a, b) = weights(nodes[a], nodes[b]);
      sub.edges(a, b) = edges(nodes[a], nodes[b]);
    }
  }
  return sub;
}

void SimilarityGraph::validate() const {
  const auto n = static_cast<Eigen::Index>(node_ids.size());
  if (weights.rows() != n || weights.cols() != n || edges.rows() != n || edges.cols() != n)
    throw Error("graph matrices do not match node count");
  for (Eigen::Index u = 0; u < n; ++u) {
    if (edges(u, u)) throw Error("self-edge on node " + node_ids[static_cast<std::size_t>(u)]);
    for (Eigen::Index v = u + 1; v < n; ++v) {
      if (edges(u, v) != edges(v, u)) throw Error("edge set is not symmetric");
      if (!edges(u, v)) continue;
      if (weights(u, v) != weights(v, u)) throw Error("edge weights are not symmetric");
      if (!std::isfinite(weights(u, v)) || weights(u, v) < 0.0)
        throw Error("edge weights must be finite and non-negative");
    }
  }
}

std::vector<std::vector<int>> connected_components(const SimilarityGraph& g) {
  const int n = g.size();
  std::vector<int> comp(static_cast<std::size_t>(n), -1);
  std::vector<std::vector<int>> out;
  for (int s = 0; s < n; ++s) {
    if (comp[static_cast<std::size_t>(s)] >= 0) continue;
    std::vector<int> members{s};
    comp[static_cast<std::size_t>(s)] = static_cast<int>(out.size());
    for (std::size_t head = 0; head < members.size(); ++head)
      for (int v = 0; v < n; ++v)
        if (g.connected(members[head], v) && comp[static_cast<std::size_t>(v)] < 0) {
          comp[static_cast<std::size_t>(v)] = static_cast<int>(out.size());
          members.push_back(v);
        }
    std::sort(members.begin(), members.end());
    out.push_back(std::move(members));
  }
  return out;
}

SimilarityGraph parse_edge_list(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::map<std::string, int> index;
  std::vector<std::string> ids;
  std::vector<std::tuple<int, int, double>> edges;
  auto id_of = [&](const std::string& label) {
    auto [it, inserted] = index.emplace(label, static_cast<int>(ids.size()));
    if (inserted) ids.push_back(label);
    return it->second;
  };
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string u, v;
    if (!(ls >> u)) continue;
    double w = 0.0;
    if (!(ls >> v >> w)) throw Error("edge list line " + std::to_string(lineno) + ": expected 'u v weight'");
    const int a = id_of(u);
    const int b = id_of(v);
    edges.emplace_back(a, b, w);
  }
  return SimilarityGraph::from_edges(std::move(ids), edges);
}

}  // namespace smanon

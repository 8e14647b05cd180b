#include "smanon/partition.hpp"

#include <algorithm>
#include <numeric>

namespace smanon {

std::vector<int> Partition::sizes() const {
  std::vector<int> out;
  out.reserve(clusters.size());
  for (const auto& c : clusters) out.push_back(static_cast<int>(c.size()));
  return out;
}

Partition Partition::canonical() const {
  Partition p = *this;
  for (auto& c : p.clusters) std::sort(c.begin(), c.end());
  std::sort(p.clusters.begin(), p.clusters.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return p;
}

void check_partition(const Partition& p, int n) {
  std::vector<int> seen(static_cast<std::size_t>(n), 0);
  for (const auto& c : p.clusters) {
    if (c.empty()) throw Error("partition contains an empty cluster");
    for (int u : c) {
      if (u < 0 || u >= n) throw Error("partition references an unknown node");
      if (seen[static_cast<std::size_t>(u)]++) throw Error("node appears in two clusters");
    }
  }
  for (int u = 0; u < n; ++u)
    if (!seen[static_cast<std::size_t>(u)]) throw Error("node " + std::to_string(u) + " is not covered");
}

double intra_weight(const Partition& p, const SimilarityGraph& g) {
  double w = 0.0;
  for (const auto& c : p.clusters)
    for (std::size_t a = 0; a < c.size(); ++a)
      for (std::size_t b = a + 1; b < c.size(); ++b)
        if (g.connected(c[a], c[b])) w += g.weights(c[a], c[b]);
  return w;
}

PartitionQuality quality(const Partition& p, const SimilarityGraph& g, int k) {
  PartitionQuality q;
  for (const auto& c : p.clusters) q.unbalance += static_cast<long>(c.size()) - k;
  q.intra_weight = intra_weight(p, g);
  return q;
}

Eigen::MatrixXd laplacian(const SimilarityGraph& g) {
  const Eigen::MatrixXd adjacency = g.edges.select(g.weights, 0.0);
  Eigen::MatrixXd l = -adjacency;
  l.diagonal() = g.edges.cast<double>().rowwise().sum().matrix();
  return l;
}

std::pair<Partition, EigenInfo> sgp_cut(const SimilarityGraph& g) {
  const int n = g.size();
  if (n < 2) throw Error("a spectral cut needs at least two nodes");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(laplacian(g));
  if (es.info() != Eigen::Success) throw Error("eigen iteration did not converge");
  EigenInfo info;
  info.lambda_max = es.eigenvalues()[n - 1];
  info.vector = es.eigenvectors().col(n - 1);
  // Sign convention: first clearly non-zero entry positive.
  const double scale = info.vector.cwiseAbs().maxCoeff();
  for (int i = 0; i < n; ++i)
    if (std::abs(info.vector[i]) > 1e-9 * scale) {
      if (info.vector[i] < 0.0) info.vector = -info.vector;
      break;
    }

  // Descending by entry, ties by ascending index: the top ceil(N/2) are exactly the nodes at or
  // above the median with ties filled in index order.
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return info.vector[a] > info.vector[b]; });
  const auto upper = static_cast<std::ptrdiff_t>((n + 1) / 2);
  Partition p;
  p.clusters.emplace_back(order.begin(), order.begin() + upper);
  p.clusters.emplace_back(order.begin() + upper, order.end());
  for (auto& c : p.clusters) std::sort(c.begin(), c.end());
  return {std::move(p), std::move(info)};
}

namespace {

std::vector<int> remap(const std::vector<int>& local, const std::vector<int>& nodes) {
  std::vector<int> out;
  out.reserve(local.size());
  for (int u : local) out.push_back(nodes[static_cast<std::size_t>(u)]);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::vector<int>> components_of(const SimilarityGraph& g, const std::vector<int>& nodes) {
  auto local = connected_components(g.induced(nodes));
  std::vector<std::vector<int>> out;
  for (const auto& c : local) out.push_back(remap(c, nodes));
  return out;
}

class Recursor {
 public:
  Recursor(const SimilarityGraph& g, int k, bool use_ip, double ip_time_limit)
      : g_(g), k_(k), use_ip_(use_ip) {
    ip_opts_.time_limit_s = ip_time_limit;
    ip_opts_.max_nodes = std::max(40, 4 * k);
  }

  Partition run() {
    std::vector<int> all(static_cast<std::size_t>(g_.size()));
    std::iota(all.begin(), all.end(), 0);
    for (auto& comp : components_of(g_, all)) {
      if (static_cast<int>(comp.size()) < 2 * k_)
        out_.clusters.push_back(std::move(comp));
      else
        cut(comp);
    }
    return out_.canonical();
  }

 private:
  void cut(const std::vector<int>& nodes) {
    auto [halves, info] = sgp_cut(g_.induced(nodes));
    for (const auto& half : halves.clusters) piece(remap(half, nodes));
  }

  void piece(const std::vector<int>& nodes) {
    auto comps = components_of(g_, nodes);
    for (auto& comp : comps) connected_piece(comp);
  }

  void connected_piece(std::vector<int>& nodes) {
    const int n = static_cast<int>(nodes.size());
    if (use_ip_ && n >= 3 * k_ && n < 4 * k_) {
      try {
        PartitionSpec spec{k_, n / k_};
        Partition ip = ip_partition(g_.induced(nodes), spec, ip_opts_);
        out_.optimal = out_.optimal && ip.optimal;
        for (const auto& c : ip.clusters) out_.clusters.push_back(remap(c, nodes));
        return;
      } catch (const Error&) {
        // Sparse pieces can make the size constraints infeasible; fall back to cutting.
      }
    }
    if (n >= 2 * k_)
      cut(nodes);
    else
      out_.clusters.push_back(std::move(nodes));
  }

  const SimilarityGraph& g_;
  int k_;
  bool use_ip_;
  IpOptions ip_opts_;
  Partition out_;
};

}  // namespace

Partition sgp_partition(const SimilarityGraph& g, int k) {
  if (k < 1) throw Error("cluster size must be positive");
  if (g.size() < k) throw Error("graph has fewer nodes than the cluster size");
  return Recursor(g, k, false, 0.0).run();
}

Partition rsgp(const SimilarityGraph& g, int k, double ip_time_limit_s) {
  if (k < 1) throw Error("cluster size must be positive");
  if (g.size() < k) throw Error("graph has fewer nodes than the cluster size");
  return Recursor(g, k, true, ip_time_limit_s).run();
}

}  // namespace smanon

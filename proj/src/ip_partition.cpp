#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>

#include "smanon/partition.hpp"

namespace smanon {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Nodes are placed in index order; a node either joins an open cluster or opens the next one,
// so clusters are implicitly ordered by their smallest member.
class BranchAndBound {
 public:
  BranchAndBound(const SimilarityGraph& g, int n_clusters, const IpOptions& opts)
      : g_(g),
        n_(g.size()),
        nc_(n_clusters),
        m_(g.size() / n_clusters),
        big_allowed_(g.size() - (g.size() / n_clusters) * n_clusters),
        deadline_(std::chrono::steady_clock::now() +
                  std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                      std::chrono::duration<double>(opts.time_limit_s))) {
    const auto n = static_cast<std::size_t>(n_);
    const auto nc = static_cast<std::size_t>(nc_);
    assign_.assign(n, -1);
    size_.assign(nc, 0);
    join_cost_.assign(n * nc, 0.0);
    blocked_.assign(n * nc, 0);
    // min_prev_[s * n + u] = min over s <= v < u of w(u, v) on existing edges.
    min_prev_.assign(n * n, kInf);
    for (int s = 0; s < n_; ++s)
      for (int u = s + 1; u < n_; ++u) {
        double best = kInf;
        for (int v = s; v < u; ++v)
          if (g_.connected(u, v)) best = std::min(best, g_.weights(u, v));
        min_prev_[idx(s, u)] = best;
      }
  }

  void seed_incumbent() {
    auto greedy = greedy_assignment();
    if (!greedy) return;
    improve(*greedy);
    best_cost_ = cost_of(*greedy);
    best_assign_ = std::move(*greedy);
  }

  void search() { dfs(0, 0.0); }

  bool timed_out() const { return timed_out_; }
  bool has_solution() const { return !best_assign_.empty(); }

  Partition result() const {
    Partition p;
    p.clusters.resize(static_cast<std::size_t>(nc_));
    for (int u = 0; u < n_; ++u) p.clusters[static_cast<std::size_t>(best_assign_[static_cast<std::size_t>(u)])].push_back(u);
    p.optimal = !timed_out_;
    return p.canonical();
  }

 private:
  std::size_t idx(int a, int b) const { return static_cast<std::size_t>(a) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(b); }
  std::size_t cidx(int u, int c) const { return static_cast<std::size_t>(u) * static_cast<std::size_t>(nc_) + static_cast<std::size_t>(c); }

  bool has_room(int c) const {
    const int s = size_[static_cast<std::size_t>(c)];
    return s < m_ || (s == m_ && big_used_ < big_allowed_);
  }

  void place(int u, int c) {
    assign_[static_cast<std::size_t>(u)] = c;
    if (++size_[static_cast<std::size_t>(c)] == m_ + 1) ++big_used_;
    for (int v = u + 1; v < n_; ++v) {
      if (g_.connected(u, v))
        join_cost_[cidx(v, c)] += g_.weights(u, v);
      else
        ++blocked_[cidx(v, c)];
    }
  }

  void unplace(int u, int c) {
    for (int v = u + 1; v < n_; ++v) {
      if (g_.connected(u, v))
        join_cost_[cidx(v, c)] -= g_.weights(u, v);
      else
        --blocked_[cidx(v, c)];
    }
    if (size_[static_cast<std::size_t>(c)]-- == m_ + 1) --big_used_;
    assign_[static_cast<std::size_t>(u)] = -1;
  }

  // Lower bound on the weight still to be added once nodes [s, n) are placed. Each future pair
  // is charged to its later endpoint; at most (nc - opened) of those endpoints open a cluster
  // and pay nothing.
  double lower_bound(int s) {
    bounds_.clear();
    const bool can_open = opened_ < nc_;
    for (int u = s; u < n_; ++u) {
      double b = can_open ? min_prev_[idx(s, u)] : kInf;
      for (int c = 0; c < opened_; ++c)
        if (has_room(c) && blocked_[cidx(u, c)] == 0) b = std::min(b, join_cost_[cidx(u, c)]);
      // With no option but opening, u must be one of the openers (infinite charge sorts first).
      if (b == kInf && !can_open) return kInf;
      bounds_.push_back(b);
    }
    const auto free_slots = static_cast<std::size_t>(nc_ - opened_);
    if (free_slots >= bounds_.size()) return 0.0;
    std::nth_element(bounds_.begin(), bounds_.begin() + static_cast<std::ptrdiff_t>(free_slots), bounds_.end(),
                     std::greater<>());
    double lb = 0.0;
    for (std::size_t i = free_slots; i < bounds_.size(); ++i) {
      if (bounds_[i] == kInf) return kInf;
      lb += bounds_[i];
    }
    return lb;
  }

  bool check_clock() {
    if ((++visited_ & 0xff) == 0 && std::chrono::steady_clock::now() > deadline_) timed_out_ = true;
    return timed_out_;
  }

  void dfs(int u, double cost) {
    if (check_clock()) return;
    if (u == n_) {
      if (cost < best_cost_) {
        best_cost_ = cost;
        best_assign_ = assign_;
      }
      return;
    }
    if (cost + lower_bound(u) >= best_cost_ - 1e-12 * std::abs(best_cost_)) return;

    struct Option {
      double inc;
      int cluster;
    };
    Option opts[66];
    int n_opts = 0;
    for (int c = 0; c < opened_; ++c)
      if (has_room(c) && blocked_[cidx(u, c)] == 0) opts[n_opts++] = {join_cost_[cidx(u, c)], c};
    if (opened_ < nc_) opts[n_opts++] = {0.0, opened_};
    std::sort(opts, opts + n_opts, [](const Option& a, const Option& b) {
      return a.inc < b.inc || (a.inc == b.inc && a.cluster < b.cluster);
    });

    for (int i = 0; i < n_opts; ++i) {
      const auto [inc, c] = opts[i];
      if (cost + inc >= best_cost_) break;
      const bool opening = c == opened_;
      if (opening) ++opened_;
      place(u, c);
      dfs(u + 1, cost + inc);
      unplace(u, c);
      if (opening) --opened_;
      if (timed_out_) return;
    }
  }

  std::vector<int> target_sizes() const {
    std::vector<int> sizes(static_cast<std::size_t>(nc_), m_);
    for (int c = 0; c < big_allowed_; ++c) ++sizes[static_cast<std::size_t>(c)];
    return sizes;
  }

  std::optional<std::vector<int>> greedy_assignment() const {
    std::vector<int> a(static_cast<std::size_t>(n_), -1);
    const auto sizes = target_sizes();
    for (int c = 0; c < nc_; ++c) {
      int seed = 0;
      while (a[static_cast<std::size_t>(seed)] >= 0) ++seed;
      std::vector<int> members{seed};
      a[static_cast<std::size_t>(seed)] = c;
      while (static_cast<int>(members.size()) < sizes[static_cast<std::size_t>(c)]) {
        int pick = -1;
        double pick_cost = kInf;
        for (int v = 0; v < n_; ++v) {
          if (a[static_cast<std::size_t>(v)] >= 0) continue;
          double w = 0.0;
          bool ok = true;
          for (int x : members) {
            if (!g_.connected(v, x)) {
              ok = false;
              break;
            }
            w += g_.weights(v, x);
          }
          if (ok && w < pick_cost) {
            pick_cost = w;
            pick = v;
          }
        }
        if (pick < 0) return std::nullopt;
        a[static_cast<std::size_t>(pick)] = c;
        members.push_back(pick);
      }
    }
    return a;
  }

  double link(int u, int c, const std::vector<int>& a, int skip) const {
    double w = 0.0;
    for (int v = 0; v < n_; ++v)
      if (v != u && v != skip && a[static_cast<std::size_t>(v)] == c) {
        if (!g_.connected(u, v)) return kInf;
        w += g_.weights(u, v);
      }
    return w;
  }

  // Pairwise swaps and big-to-small moves until no strict improvement.
  void improve(std::vector<int>& a) const {
    std::vector<int> sz(static_cast<std::size_t>(nc_), 0);
    for (int c : a) ++sz[static_cast<std::size_t>(c)];
    for (int pass = 0; pass < 50; ++pass) {
      bool changed = false;
      for (int u = 0; u < n_; ++u)
        for (int v = u + 1; v < n_; ++v) {
          const int cu = a[static_cast<std::size_t>(u)], cv = a[static_cast<std::size_t>(v)];
          if (cu == cv) continue;
          const double before = link(u, cu, a, -1) + link(v, cv, a, -1);
          const double after = link(u, cv, a, v) + link(v, cu, a, u);
          if (after < before - 1e-12 * std::max(1.0, before)) {
            std::swap(a[static_cast<std::size_t>(u)], a[static_cast<std::size_t>(v)]);
            changed = true;
          }
        }
      for (int u = 0; u < n_; ++u) {
        const int cu = a[static_cast<std::size_t>(u)];
        if (sz[static_cast<std::size_t>(cu)] != m_ + 1) continue;
        for (int c = 0; c < nc_; ++c) {
          if (sz[static_cast<std::size_t>(c)] != m_) continue;
          if (link(u, c, a, -1) < link(u, cu, a, -1) - 1e-12) {
            a[static_cast<std::size_t>(u)] = c;
            --sz[static_cast<std::size_t>(cu)];
            ++sz[static_cast<std::size_t>(c)];
            changed = true;
            break;
          }
        }
      }
      if (!changed) break;
    }
  }

  double cost_of(const std::vector<int>& a) const {
    double w = 0.0;
    for (int u = 0; u < n_; ++u)
      for (int v = u + 1; v < n_; ++v)
        if (a[static_cast<std::size_t>(u)] == a[static_cast<std::size_t>(v)]) w += g_.weights(u, v);
    return w;
  }

  const SimilarityGraph& g_;
  int n_, nc_, m_, big_allowed_;
  std::chrono::steady_clock::time_point deadline_;

  std::vector<int> assign_;
  std::vector<int> size_;
  std::vector<double> join_cost_;
  std::vector<int> blocked_;
  std::vector<double> min_prev_;
  std::vector<double> bounds_;
  int opened_ = 0;
  int big_used_ = 0;

  double best_cost_ = kInf;
  std::vector<int> best_assign_;
  std::uint64_t visited_ = 0;
  bool timed_out_ = false;
};

}  // namespace

Partition ip_partition(const SimilarityGraph& g, const PartitionSpec& spec, const IpOptions& opts) {
  const int n = g.size();
  if (spec.k < 1) throw Error("cluster size must be positive");
  if (n > opts.max_nodes)
    throw Error("exact partitioning is capped at " + std::to_string(opts.max_nodes) + " records");
  const int nc = spec.n_clusters.value_or(n / spec.k);
  if (nc < 1 || nc > n || (spec.n_clusters && static_cast<long>(nc) * spec.k > n))
    throw Error("infeasible size constraints");
  if (nc > 64) throw Error("too many clusters for exact partitioning");

  BranchAndBound bb(g, nc, opts);
  bb.seed_incumbent();
  bb.search();
  if (!bb.has_solution())
    throw Error(bb.timed_out() ? "time limit reached before a feasible partition was found"
                               : "infeasible size constraints");
  return bb.result();
}

}  // namespace smanon

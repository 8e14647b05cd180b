#include "smanon/allocate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "smanon/features.hpp"
#include "smanon/mincost_flow.hpp"

namespace smanon {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_eps(double eps, const char* what) {
  if (!(eps >= 0.0)) throw Error(std::string("empty tolerance interval: ") + what + " is negative");
  if (eps > 1.0) throw Error(std::string(what) + " must not exceed 1");
}

}  // namespace

std::map<LoadCategory, int> default_k(const Network& network, const LoadDatabase& db) {
  std::map<LoadCategory, int> nodes, candidates;
  for (const auto& u : network.unknown_loads) ++nodes[u.category];
  for (const auto& e : db.entries) ++candidates[e.category];
  std::map<LoadCategory, int> k;
  for (const auto& [cat, n] : nodes) {
    const int j = candidates[cat];
    if (j == 0)
      throw Error("no database profile of category " + std::string(to_string(cat)));
    k[cat] = (n + j - 1) / j;
  }
  return k;
}

double pair_cost(double e_node, double e_candidate, double eps_energy, double* e_var) {
  const double lo = (1.0 - eps_energy) * e_node;
  const double hi = (1.0 + eps_energy) * e_node;
  double var = 0.0;
  if (e_candidate > 0.0) {
    var = std::clamp(e_candidate, lo, hi);
    // A zero scale would mean "not allocated".
    if (!(var > 0.0)) return kInf;
  } else if (lo > 0.0) {
    return kInf;
  }
  if (e_var) *e_var = var;
  const double d = e_candidate - var;
  return d * d;
}

Stage1Result stage1_allocate(const Network& network, const LoadDatabase& db, const TimeGrid& grid,
                             const AllocationConfig& cfg) {
  check_eps(cfg.eps_energy, "eps_energy");
  const auto n_nodes = network.unknown_loads.size();
  Stage1Result res;
  res.assignment.assign(n_nodes, -1);
  res.scale = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_nodes));
  res.e_ref = res.e_org = res.e_var = res.scale;
  if (n_nodes == 0) return res;

  std::vector<double> e_db(db.entries.size());
  for (std::size_t j = 0; j < db.entries.size(); ++j) e_db[j] = annual_energy(db.entries[j], grid);

  res.k_used = default_k(network, db);
  for (const auto& [cat, k] : cfg.k_per_category)
    if (res.k_used.count(cat)) {
      if (k < 1) throw Error("k per category must be at least 1");
      res.k_used[cat] = k;
    }

  for (const auto cat : kAllCategories) {
    std::vector<int> nodes, cands;
    for (std::size_t n = 0; n < n_nodes; ++n)
      if (network.unknown_loads[n].category == cat) nodes.push_back(static_cast<int>(n));
    if (nodes.empty()) continue;
    for (std::size_t j = 0; j < db.entries.size(); ++j)
      if (db.entries[j].category == cat) cands.push_back(static_cast<int>(j));
    const int k = res.k_used.at(cat);
    if (nodes.size() > static_cast<std::size_t>(k) * cands.size())
      throw Error("infeasible capacities for category " + std::string(to_string(cat)));

    // Work in units of the largest energy so that squared costs stay well scaled.
    double scale = 0.0;
    for (int n : nodes) scale = std::max(scale, network.unknown_loads[static_cast<std::size_t>(n)].energy_j);
    for (int j : cands) scale = std::max(scale, e_db[static_cast<std::size_t>(j)]);
    if (scale <= 0.0) scale = 1.0;

    const int n_n = static_cast<int>(nodes.size()), n_c = static_cast<int>(cands.size());
    const int source = 0, sink = 1 + n_n + n_c;
    MinCostFlow flow(sink + 1);
    std::vector<std::pair<int, std::pair<int, int>>> pair_arcs;
    for (int a = 0; a < n_n; ++a) flow.add_arc(source, 1 + a, 1, 0.0);
    for (int a = 0; a < n_n; ++a) {
      const double e_n = network.unknown_loads[static_cast<std::size_t>(nodes[static_cast<std::size_t>(a)])].energy_j;
      for (int b = 0; b < n_c; ++b) {
        const double c = pair_cost(e_n / scale, e_db[static_cast<std::size_t>(cands[static_cast<std::size_t>(b)])] / scale,
                                   cfg.eps_energy);
        if (c == kInf) continue;
        pair_arcs.push_back({flow.add_arc(1 + a, 1 + n_n + b, 1, c), {a, b}});
      }
    }
    for (int b = 0; b < n_c; ++b) flow.add_arc(1 + n_n + b, sink, k, 0.0);
    const auto sol = flow.solve(source, sink, n_n);
    if (sol.flow < n_n)
      throw Error("infeasible capacities for category " + std::string(to_string(cat)) +
                  ": not every node can receive a profile");

    for (const auto& [arc, ab] : pair_arcs) {
      if (flow.flow(arc) == 0) continue;
      const auto node = static_cast<std::size_t>(nodes[static_cast<std::size_t>(ab.first)]);
      const int j = cands[static_cast<std::size_t>(ab.second)];
      const double e_n = network.unknown_loads[node].energy_j;
      const double e_j = e_db[static_cast<std::size_t>(j)];
      double e_var = 0.0;
      pair_cost(e_n, e_j, cfg.eps_energy, &e_var);
      const auto i = static_cast<Eigen::Index>(node);
      res.assignment[node] = j;
      res.e_ref[i] = e_n;
      res.e_org[i] = e_j;
      res.e_var[i] = e_var;
      res.scale[i] = e_j > 0.0 ? e_var / e_j : 1.0;
    }
  }
  res.objective = (res.e_org - res.e_var).squaredNorm();
  return res;
}

Stage2Result stage2_tune(const Network& network, const LoadDatabase& db, const TimeGrid& grid,
                         const Stage1Result& s1, const Stage2Inputs& inputs,
                         const AllocationConfig& cfg, const ProjectionOptions& opts) {
  check_eps(cfg.eps_energy, "eps_energy");
  check_eps(cfg.eps_power, "eps_power");
  const auto T = static_cast<Eigen::Index>(grid.size());
  const auto N = static_cast<Eigen::Index>(network.unknown_loads.size());
  if (inputs.transformer_w.size() != T) throw Error("transformer series is not aligned to the time grid");
  if (static_cast<Eigen::Index>(s1.assignment.size()) != N)
    throw Error("stage-1 result does not match the network");

  Eigen::VectorXd known = Eigen::VectorXd::Zero(T);
  for (const auto& [bus, meter] : network.known_loads) {
    auto it = inputs.known_w.find(bus);
    if (it == inputs.known_w.end()) throw Error("no measured series for known load at bus '" + bus + "'");
    if (it->second.size() != T) throw Error("known load series at '" + bus + "' is not aligned");
    known += it->second;
  }

  Stage2Result res;
  res.p_org.resize(N, T);
  for (Eigen::Index n = 0; n < N; ++n) {
    const int j = s1.assignment[static_cast<std::size_t>(n)];
    if (j < 0 || static_cast<std::size_t>(j) >= db.entries.size()) throw Error("unassigned node in stage-1 result");
    if (db.entries[static_cast<std::size_t>(j)].power_w.size() != T)
      throw Error("database profile is not aligned to the time grid");
    res.p_org.row(n) = db.entries[static_cast<std::size_t>(j)].power_w.transpose();
  }

  BandConstraints c;
  c.step = grid.step_seconds();
  c.col_ref = inputs.transformer_w;
  c.col_lo = (1.0 - cfg.eps_power) * inputs.transformer_w - known;
  c.col_hi = (1.0 + cfg.eps_power) * inputs.transformer_w - known;
  c.row_ref.resize(N);
  for (Eigen::Index n = 0; n < N; ++n) c.row_ref[n] = network.unknown_loads[static_cast<std::size_t>(n)].energy_j;
  c.row_lo = (1.0 - cfg.eps_energy) * c.row_ref;
  c.row_hi = (1.0 + cfg.eps_energy) * c.row_ref;
  c.pinned = res.p_org.array() <= 0.0;

  if (N == 0) {
    res.p_var_trafo = known;
    res.e_var.resize(0);
    res.converged = true;
    res.max_violation = 0.0;
    for (Eigen::Index t = 0; t < T; ++t)
      if (known[t] < c.col_lo[t] + known[t] - 1e-9 * std::abs(c.col_ref[t]) ||
          known[t] > c.col_hi[t] + known[t] + 1e-9 * std::abs(c.col_ref[t]))
        res.max_violation = std::max(res.max_violation, 1.0);
    return res;
  }

  for (Eigen::Index t = 0; t < T; ++t) {
    if (c.col_hi[t] < 0.0)
      throw Error("infeasible transformer band at timestep " + std::to_string(t) + " (" +
                  format_iso8601(grid[static_cast<std::size_t>(t)]) +
                  "): known loads exceed the upper tolerance");
    if (c.col_lo[t] > 0.0 && c.pinned.col(t).all())
      throw Error("infeasible transformer band at timestep " + std::to_string(t) +
                  ": every allocated profile is zero there");
  }
  for (Eigen::Index n = 0; n < N; ++n)
    if (c.row_lo[n] > 0.0 && c.pinned.row(n).all())
      throw Error("infeasible energy band for node '" + network.unknown_loads[static_cast<std::size_t>(n)].bus +
                  "': its allocated profile is identically zero");
  const double col_min = c.col_lo.cwiseMax(0.0).sum() * c.step, col_max = c.col_hi.sum() * c.step;
  const double row_min = c.row_lo.sum(), row_max = c.row_hi.sum();
  if (col_min > row_max * (1.0 + 1e-12) || row_min > col_max * (1.0 + 1e-12))
    throw Error("infeasible stage-2 instance: total energy implied by the transformer band does not "
                "meet the nodes' energy bands");

  auto proj = dykstra_project(res.p_org, c, opts);
  res.p_var = std::move(proj.x);
  res.max_violation = proj.max_violation;
  res.sweeps = proj.sweeps;
  res.converged = proj.converged;
  res.gamma = (c.pinned).select(Eigen::MatrixXd::Ones(N, T), res.p_var.cwiseQuotient(res.p_org));
  res.p_var_trafo = res.p_var.colwise().sum().transpose() + known;
  res.e_var = res.p_var.rowwise().sum() * c.step;
  res.objective = (res.p_var - res.p_org).squaredNorm();
  return res;
}

AllocationOutcome allocation_pipeline(const Network& network, const LoadDatabase& db,
                                      const TimeGrid& grid, const Stage2Inputs& inputs,
                                      const AllocationConfig& cfg, const ProjectionOptions& opts) {
  AllocationOutcome out;
  out.stage1 = stage1_allocate(network, db, grid, cfg);
  out.stage2 = stage2_tune(network, db, grid, out.stage1, inputs, cfg, opts);
  for (const auto& [bus, meter] : network.known_loads) out.bus_power_w[bus] = inputs.known_w.at(bus);
  for (std::size_t n = 0; n < network.unknown_loads.size(); ++n)
    out.bus_power_w[network.unknown_loads[n].bus] =
        out.stage2.p_var.row(static_cast<Eigen::Index>(n)).transpose();
  return out;
}

}  // namespace smanon

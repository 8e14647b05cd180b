#include "smanon/powerflow.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace smanon {

namespace {

// Iteration keeps going past the convergence threshold down to this change so that warm and
// cold starts land on the same fixed point.
constexpr double kPolishTol = 1e-13;

double tan_phi_of(double pf) {
  if (!(pf > 0.0 && pf <= 1.0)) throw Error("power factor must lie in (0, 1]");
  return std::tan(std::acos(pf));
}

}  // namespace

int PowerFlowResult::n_nonconverged() const {
  return static_cast<int>(std::count(converged.begin(), converged.end(), 0));
}

RadialSolver::RadialSolver(const Network& network, double s_base_va) : s_base_(s_base_va) {
  if (!(s_base_va > 0.0)) throw Error("power base must be positive");
  network.validate();
  const auto B = network.buses.size();
  slack_ = static_cast<int>(*network.bus_index(network.transformer_bus));
  parent_.assign(B, -1);
  line_of_bus_.assign(B, -1);
  z_.resize(network.lines.size());
  ends_.resize(network.lines.size());
  i_base_.resize(network.lines.size());

  std::vector<std::vector<std::pair<int, int>>> adj(B);  // (neighbour, line)
  for (std::size_t l = 0; l < network.lines.size(); ++l) {
    const int a = static_cast<int>(*network.bus_index(network.lines[l].from_bus));
    const int b = static_cast<int>(*network.bus_index(network.lines[l].to_bus));
    adj[static_cast<std::size_t>(a)].push_back({b, static_cast<int>(l)});
    adj[static_cast<std::size_t>(b)].push_back({a, static_cast<int>(l)});
  }
  std::vector<char> seen(B, 0);
  order_.push_back(slack_);
  seen[static_cast<std::size_t>(slack_)] = 1;
  for (std::size_t head = 0; head < order_.size(); ++head) {
    const int u = order_[head];
    for (auto [v, l] : adj[static_cast<std::size_t>(u)]) {
      if (seen[static_cast<std::size_t>(v)]) continue;
      seen[static_cast<std::size_t>(v)] = 1;
      parent_[static_cast<std::size_t>(v)] = u;
      line_of_bus_[static_cast<std::size_t>(v)] = l;
      const auto& line = network.lines[static_cast<std::size_t>(l)];
      const double v_base = network.buses[static_cast<std::size_t>(v)].v_base_v;
      if (!(v_base > 0.0)) throw Error("bus '" + network.buses[static_cast<std::size_t>(v)].id + "' has no positive base voltage");
      const double z_base = v_base * v_base / s_base_;
      z_[static_cast<std::size_t>(l)] = {line.r_ohm / z_base, line.x_ohm / z_base};
      ends_[static_cast<std::size_t>(l)] = {u, v};
      i_base_[static_cast<std::size_t>(l)] = s_base_ / (std::sqrt(3.0) * v_base);
      order_.push_back(v);
    }
  }
}

TimestepSolution RadialSolver::solve(const Eigen::VectorXcd& s_va, const Eigen::VectorXcd* warm,
                                     const PowerFlowOptions& opts) const {
  const auto B = static_cast<Eigen::Index>(parent_.size());
  if (s_va.size() != B) throw Error("load vector does not match the bus count");
  const Eigen::VectorXcd s = s_va / s_base_;
  TimestepSolution sol;
  sol.v_pu = (warm && warm->size() == B) ? *warm : Eigen::VectorXcd::Ones(B);
  sol.v_pu[slack_] = 1.0;
  Eigen::VectorXcd inj(B);
  sol.i_pu.resize(static_cast<Eigen::Index>(z_.size()));

  auto backward = [&] {
    for (Eigen::Index b = 0; b < B; ++b) inj[b] = s[b] == 0.0 ? 0.0 : std::conj(s[b] / sol.v_pu[b]);
    sol.i_pu.setZero();
    for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
      const int b = *it;
      const int l = line_of_bus_[static_cast<std::size_t>(b)];
      if (l < 0) continue;
      sol.i_pu[l] += inj[b];
      const int p = parent_[static_cast<std::size_t>(b)];
      const int pl = line_of_bus_[static_cast<std::size_t>(p)];
      if (pl >= 0) sol.i_pu[pl] += sol.i_pu[l];
    }
  };

  double dv = 0.0;
  for (sol.iterations = 1; sol.iterations <= opts.max_iter; ++sol.iterations) {
    backward();
    dv = 0.0;
    for (std::size_t k = 1; k < order_.size(); ++k) {
      const int b = order_[k];
      const int l = line_of_bus_[static_cast<std::size_t>(b)];
      const std::complex<double> v =
          sol.v_pu[parent_[static_cast<std::size_t>(b)]] - z_[static_cast<std::size_t>(l)] * sol.i_pu[l];
      dv = std::max(dv, std::abs(v - sol.v_pu[b]));
      sol.v_pu[b] = v;
    }
    if (!std::isfinite(dv) || dv < kPolishTol) break;
  }
  sol.iterations = std::min(sol.iterations, opts.max_iter);
  sol.converged = std::isfinite(dv) && dv < opts.tol;

  backward();
  std::complex<double> out = inj[slack_];
  for (std::size_t l = 0; l < ends_.size(); ++l)
    if (ends_[l].first == slack_) out += sol.i_pu[static_cast<Eigen::Index>(l)];
  sol.s_slack_va = sol.v_pu[slack_] * std::conj(out) * s_base_;
  sol.i_a.resize(sol.i_pu.size());
  for (Eigen::Index l = 0; l < sol.i_pu.size(); ++l) sol.i_a[l] = std::abs(sol.i_pu[l]) * i_base_[static_cast<std::size_t>(l)];
  return sol;
}

PowerFlowResult RadialSolver::solve_series(const Eigen::MatrixXd& p_w, const Eigen::VectorXd& tan_phi,
                                           const PowerFlowOptions& opts) const {
  const auto B = static_cast<Eigen::Index>(parent_.size());
  if (p_w.rows() != B || tan_phi.size() != B) throw Error("load matrix does not match the bus count");
  const Eigen::Index T = p_w.cols();
  PowerFlowResult res;
  res.v_pu.resize(B, T);
  res.i_a.resize(static_cast<Eigen::Index>(z_.size()), T);
  res.p_trafo_w.resize(T);
  res.converged.assign(static_cast<std::size_t>(T), 0);

  auto run = [&](Eigen::Index t0, Eigen::Index t1, bool warm) {
    Eigen::VectorXcd s(B), last;
    bool have_last = false;
    for (Eigen::Index t = t0; t < t1; ++t) {
      for (Eigen::Index b = 0; b < B; ++b) s[b] = {p_w(b, t), p_w(b, t) * tan_phi[b]};
      const auto sol = solve(s, warm && have_last ? &last : nullptr, opts);
      res.v_pu.col(t) = sol.v_pu.cwiseAbs();
      res.i_a.col(t) = sol.i_a;
      res.p_trafo_w[t] = sol.s_slack_va.real();
      res.converged[static_cast<std::size_t>(t)] = sol.converged ? 1 : 0;
      have_last = sol.converged;
      if (have_last) last = sol.v_pu;
    }
  };

  const int jobs = std::max(1, std::min<int>(opts.jobs, static_cast<int>(T)));
  if (jobs == 1) {
    run(0, T, opts.warm_start);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < jobs; ++w)
      pool.emplace_back(run, T * w / jobs, T * (w + 1) / jobs, false);
    for (auto& th : pool) th.join();
  }
  return res;
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> load_matrix(const Network& network,
                                                        const LoadAssignment& loads) {
  const auto B = static_cast<Eigen::Index>(network.buses.size());
  Eigen::Index T = -1;
  for (const auto& [bus, series] : loads.bus_power_w) {
    if (T < 0) T = series.size();
    if (series.size() != T) throw Error("load series are not aligned to one time grid");
  }
  if (T < 0) T = 0;
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(B, T);
  Eigen::VectorXd tan_phi = Eigen::VectorXd::Constant(B, tan_phi_of(loads.power_factor));
  for (const auto& [bus, series] : loads.bus_power_w) {
    const auto i = network.bus_index(bus);
    if (!i) throw Error("load assigned to unknown bus '" + bus + "'");
    p.row(static_cast<Eigen::Index>(*i)) = series.transpose();
  }
  for (const auto& [bus, pf] : loads.power_factor_by_bus) {
    const auto i = network.bus_index(bus);
    if (!i) throw Error("power factor given for unknown bus '" + bus + "'");
    tan_phi[static_cast<Eigen::Index>(*i)] = tan_phi_of(pf);
  }
  return {std::move(p), std::move(tan_phi)};
}

TimestepSolution solve_timestep(const Network& network,
                                const std::map<std::string, std::complex<double>>& loads_va,
                                const PowerFlowOptions& opts) {
  RadialSolver solver(network, opts.s_base_va);
  Eigen::VectorXcd s = Eigen::VectorXcd::Zero(solver.n_buses());
  for (const auto& [bus, v] : loads_va) {
    const auto i = network.bus_index(bus);
    if (!i) throw Error("load assigned to unknown bus '" + bus + "'");
    s[static_cast<Eigen::Index>(*i)] = v;
  }
  return solver.solve(s, nullptr, opts);
}

PowerFlowResult solve_series(const Network& network, const LoadAssignment& loads,
                             const PowerFlowOptions& opts) {
  RadialSolver solver(network, opts.s_base_va);
  const auto [p, tan_phi] = load_matrix(network, loads);
  return solver.solve_series(p, tan_phi, opts);
}

}  // namespace smanon

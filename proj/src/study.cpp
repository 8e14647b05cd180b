#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "smanon/bench.hpp"

namespace smanon {

namespace {

struct BusRef {
  std::size_t network;
  Eigen::Index row;
};

// Runs fn(i) for i in [0, n) on up to `jobs` threads; each index is handled exactly once.
template <typename F>
void parallel_for(int n, int jobs, F&& fn) {
  jobs = std::max(1, std::min(jobs, n));
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < jobs; ++w)
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) fn(i);
    });
  for (auto& t : pool) t.join();
}

double mean_of(const std::vector<double>& x) {
  return x.empty() ? 0.0 : std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double std_of(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  const double m = mean_of(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size() - 1));
}

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::Allocation: return "allocation";
    case Method::Smanet: return "smanet";
    case Method::Both: return "both";
  }
  return "?";
}

Method parse_method(std::string_view text) {
  if (text == "allocation") return Method::Allocation;
  if (text == "smanet") return Method::Smanet;
  if (text == "both") return Method::Both;
  throw Error("unknown method '" + std::string(text) + "'");
}

void running_statistics(const std::vector<double>& x, std::vector<double>& mean, std::vector<double>& var_of_mean) {
  mean.assign(x.size(), 0.0);
  var_of_mean.assign(x.size(), std::numeric_limits<double>::quiet_NaN());
  // Welford's update.
  double m = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double n = static_cast<double>(i + 1);
    const double d = x[i] - m;
    m += d / n;
    m2 += d * (x[i] - m);
    mean[i] = m;
    if (i >= 1) var_of_mean[i] = m2 / (n - 1.0) / n;
  }
}

double log_log_slope(const std::vector<double>& variance, int first) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (std::size_t i = static_cast<std::size_t>(std::max(first, 2) - 1); i < variance.size(); ++i) {
    const double v = variance[i];
    if (!(v > 0.0) || !std::isfinite(v)) continue;
    const double x = std::log(static_cast<double>(i + 1)), y = std::log(v);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++cnt;
  }
  if (cnt < 2) return std::numeric_limits<double>::quiet_NaN();
  const double denom = cnt * sxx - sx * sx;
  return denom == 0.0 ? std::numeric_limits<double>::quiet_NaN() : (cnt * sxy - sx * sy) / denom;
}

StudyReport run_study(const SynthReference& ref, const StudyOptions& opts) {
  if (opts.n_iter < 1) throw Error("the study needs at least one iteration");
  const std::size_t n_net = ref.networks.size();
  StudyReport rep;
  rep.n_iter = opts.n_iter;
  rep.base_seed = opts.base_seed;
  rep.paper_literal = opts.paper_literal;
  rep.timesteps = static_cast<int>(ref.grid.size());

  PowerFlowOptions pf = opts.powerflow;
  pf.jobs = 1;
  std::vector<RadialSolver> solvers;
  std::vector<Eigen::VectorXd> tan_phi;
  std::vector<PowerFlowResult> ref_flow(n_net);
  for (std::size_t n = 0; n < n_net; ++n) {
    const auto& net = ref.networks[n];
    rep.networks.push_back(net.name);
    solvers.emplace_back(net, pf.s_base_va);
    LoadAssignment truth;
    truth.power_factor = opts.power_factor;
    for (const auto& p : ref.meters[n].profiles) truth.bus_power_w[ref.meter_bus[n].at(p.meter_id)] = p.power_w;
    auto [p, tp] = load_matrix(net, truth);
    tan_phi.push_back(tp);
    ref_flow[n] = solvers[n].solve_series(p, tp, pf);
    rep.reference_v_min[net.name] = ref_flow[n].v_pu.minCoeff();
    rep.reference_v_max[net.name] = ref_flow[n].v_pu.maxCoeff();
  }

  if (opts.method != Method::Smanet) {
    rep.has_allocation = true;
    auto& a = rep.allocation;
    for (std::size_t n = 0; n < n_net; ++n) {
      const auto& net = ref.networks[n];
      try {
        Stage2Inputs in;
        in.transformer_w = ref_flow[n].p_trafo_w;
        for (const auto& [bus, meter] : net.known_loads) in.known_w[bus] = ref.meters[n].find(meter)->power_w;
        const auto out = allocation_pipeline(net, ref.database, ref.grid, in, opts.allocation, opts.projection);
        a.all_converged = a.all_converged && out.stage2.converged;
        for (Eigen::Index t = 0; t < in.transformer_w.size(); ++t) {
          const double rel = std::abs(1.0 - out.stage2.p_var_trafo[t] / in.transformer_w[t]);
          a.max_balance_violation = std::max(a.max_balance_violation, rel - opts.allocation.eps_power);
        }
        for (Eigen::Index i = 0; i < out.stage2.e_var.size(); ++i) {
          const double e_ref = net.unknown_loads[static_cast<std::size_t>(i)].energy_j;
          a.max_energy_violation =
              std::max(a.max_energy_violation, std::abs(1.0 - out.stage2.e_var[i] / e_ref) - opts.allocation.eps_energy);
        }
        LoadAssignment la;
        la.power_factor = opts.power_factor;
        la.bus_power_w = out.bus_power_w;
        const auto [p, tp] = load_matrix(net, la);
        const auto flow = solvers[n].solve_series(p, tp, pf);
        for (Eigen::Index t = 0; t < flow.p_trafo_w.size(); ++t)
          a.max_loadflow_trafo_error =
              std::max(a.max_loadflow_trafo_error, std::abs(1.0 - flow.p_trafo_w[t] / in.transformer_w[t]));
        a.per_network.push_back({net.name, compute_kpis(flow, ref_flow[n], opts.paper_literal)});
      } catch (const Error& e) {
        a.errors.push_back(net.name + ": " + e.what());
      }
    }
  }

  if (opts.method == Method::Allocation) return rep;

  // Anonymisation pools the meters of all networks into one dataset.
  std::vector<LoadProfile> pooled;
  std::map<std::string, std::string> meter_bus;
  std::map<std::string, const LoadProfile*> profile_of;
  std::map<std::string, BusRef> bus_ref;
  for (std::size_t n = 0; n < n_net; ++n) {
    const auto& net = ref.networks[n];
    for (const auto& p : ref.meters[n].profiles) {
      pooled.push_back(p);
      meter_bus[p.meter_id] = net.name + "/" + ref.meter_bus[n].at(p.meter_id);
    }
    for (std::size_t b = 0; b < net.buses.size(); ++b)
      bus_ref[net.name + "/" + net.buses[b].id] = {n, static_cast<Eigen::Index>(b)};
  }
  for (const auto& p : pooled) profile_of[p.meter_id] = &p;

  for (const auto scen : opts.scenarios) {
    ScenarioReport sr;
    sr.scenario = scen;
    GroupingOptions go;
    go.scenario = {scen, opts.pca_variance_target};
    go.k = opts.k;
    go.threshold = opts.threshold;
    go.ip_time_limit_s = opts.ip_time_limit_s;
    go.seed = opts.base_seed;
    GroupingDetail detail;
    const auto x = build_groups(pooled, ref.grid, meter_bus, go, &detail);
    sr.n_groups = static_cast<int>(x.groups.size());
    for (const auto& g : x.groups) sr.group_sizes.push_back(static_cast<int>(g.meters.size()));
    const auto audit = anonymity_audit(x, detail.features, opts.audit_percentile);
    for (const auto& g : audit.groups) sr.flagged_groups += g.flagged ? 1 : 0;

    const int iters = opts.n_iter;
    std::vector<double> mse(static_cast<std::size_t>(iters));
    std::vector<std::vector<KpiReport>> kpis(static_cast<std::size_t>(iters));
    std::vector<int> dropped(static_cast<std::size_t>(iters), 0);
    parallel_for(iters, opts.jobs, [&](int i) {
      const auto sample = sample_assignment(x, opts.base_seed + static_cast<std::uint64_t>(i));
      std::vector<Eigen::MatrixXd> loads;
      for (std::size_t n = 0; n < n_net; ++n)
        loads.push_back(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ref.networks[n].buses.size()),
                                              static_cast<Eigen::Index>(ref.grid.size())));
      for (const auto& [meter, bus] : sample.mapping) {
        const auto& br = bus_ref.at(bus);
        loads[br.network].row(br.row) += profile_of.at(meter)->power_w.transpose();
      }
      double sse = 0.0, denom = 0.0;
      auto& k = kpis[static_cast<std::size_t>(i)];
      for (std::size_t n = 0; n < n_net; ++n) {
        const auto flow = solvers[n].solve_series(loads[n], tan_phi[n], pf);
        const auto e = voltage_squared_error(flow, ref_flow[n]);
        sse += e.sse;
        denom += opts.paper_literal ? static_cast<double>(e.buses) : static_cast<double>(e.buses * e.timesteps);
        k.push_back(compute_kpis(flow, ref_flow[n], opts.paper_literal));
        dropped[static_cast<std::size_t>(i)] += k.back().dropped_timesteps;
      }
      mse[static_cast<std::size_t>(i)] = sse / denom;
    });

    sr.mse_per_iter = mse;
    running_statistics(mse, sr.cumulative_mse, sr.estimate_variance);
    sr.convergence_slope = log_log_slope(sr.estimate_variance, 10);
    sr.mse_mean = mean_of(mse);
    sr.mse_std = std_of(mse);
    for (int d : dropped) sr.dropped_timesteps += d;
    const std::pair<const char*, double KpiReport::*> fields[] = {
        {"e_max_trl", &KpiReport::e_max_trl}, {"e_max_lnl", &KpiReport::e_max_lnl}, {"e_min_vm", &KpiReport::e_min_vm}};
    for (const auto& [name, field] : fields) {
      std::vector<double> v;
      for (const auto& k : kpis) {
        double s = 0.0;
        for (const auto& r : k) s += r.*field;
        v.push_back(s / static_cast<double>(k.size()));
      }
      sr.kpi_mean[name] = mean_of(v);
      sr.kpi_std[name] = std_of(v);
    }
    for (std::size_t n = 0; n < n_net; ++n) {
      KpiReport m;
      for (const auto& k : kpis) {
        m.mse_vm += k[n].mse_vm;
        m.e_max_trl += k[n].e_max_trl;
        m.e_max_lnl += k[n].e_max_lnl;
        m.e_min_vm += k[n].e_min_vm;
        m.dropped_timesteps += k[n].dropped_timesteps;
      }
      const double c = static_cast<double>(kpis.size());
      m.mse_vm /= c;
      m.e_max_trl /= c;
      m.e_max_lnl /= c;
      m.e_min_vm /= c;
      sr.per_network_mean.push_back({ref.networks[n].name, m});
    }
    rep.scenarios.push_back(std::move(sr));
  }
  return rep;
}

}  // namespace smanon

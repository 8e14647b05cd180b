#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "smanon/allocate.hpp"
#include "smanon/graph.hpp"
#include "smanon/model.hpp"
#include "smanon/rng.hpp"

namespace testing {

inline std::vector<std::string> index_ids(int n) {
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) ids.push_back("n" + std::to_string(i));
  return ids;
}

/// Complete graph with Euclidean distances between random points in the unit square.
inline smanon::SimilarityGraph random_complete(int n, smanon::Rng& rng, int dims = 2) {
  Eigen::MatrixXd x(n, dims);
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < dims; ++d) x(i, d) = rng.uniform();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v) w(u, v) = w(v, u) = (x.row(u) - x.row(v)).norm();
  return smanon::SimilarityGraph::complete(index_ids(n), w);
}

/// Random radial network of `n_buses` buses at 400 V; loads on every non-transformer bus.
inline smanon::Network random_radial(int n_buses, smanon::Rng& rng) {
  smanon::Network net;
  net.name = "rand";
  net.transformer_bus = "b0";
  for (int i = 0; i < n_buses; ++i) net.buses.push_back({"b" + std::to_string(i), 400.0});
  for (int i = 1; i < n_buses; ++i) {
    const int parent = static_cast<int>(rng.below(static_cast<std::uint64_t>(i)));
    const double len = 0.02 + 0.1 * rng.uniform();
    net.lines.push_back({"b" + std::to_string(parent), "b" + std::to_string(i), 0.2 * len + 0.05 * rng.uniform() * len,
                         0.08 * len * rng.uniform(), 200.0});
  }
  return net;
}

inline smanon::TimeGrid grid_of(std::size_t n, std::int64_t step = 900) {
  return smanon::TimeGrid::uniform(smanon::parse_iso8601("2021-01-04T00:00:00Z"), step, n);
}

/// Random stage-2 instance generated around a known feasible point so the bands always intersect.
struct Stage2Instance {
  smanon::Network network;
  smanon::LoadDatabase db;
  smanon::TimeGrid grid;
  smanon::Stage1Result s1;
  smanon::Stage2Inputs inputs;
};

inline Stage2Instance random_stage2(int nodes, int steps, smanon::Rng& rng, double sparsity = 0.1) {
  Stage2Instance in;
  in.grid = grid_of(static_cast<std::size_t>(steps));
  in.network.name = "s2";
  in.network.transformer_bus = "tr";
  in.network.buses.push_back({"tr", 400.0});
  Eigen::MatrixXd truth(nodes, steps);
  for (int n = 0; n < nodes; ++n) {
    const std::string bus = "u" + std::to_string(n);
    in.network.buses.push_back({bus, 400.0});
    in.network.lines.push_back({"tr", bus, 0.01, 0.0, 100.0});
    smanon::LoadProfile p;
    p.meter_id = "db" + std::to_string(n);
    p.category = smanon::LoadCategory::House;
    p.power_w.resize(steps);
    for (int t = 0; t < steps; ++t) {
      p.power_w[t] = rng.uniform() < sparsity ? 0.0 : 200.0 + 1800.0 * rng.uniform();
      truth(n, t) = p.power_w[t] * (0.6 + 0.8 * rng.uniform());
    }
    in.db.entries.push_back(p);
    in.network.unknown_loads.push_back({bus, truth.row(n).sum() * in.grid.step_seconds() * (0.97 + 0.06 * rng.uniform()),
                                        smanon::LoadCategory::House});
    in.s1.assignment.push_back(n);
  }
  // A known load as well, so K_t enters the band.
  in.network.buses.push_back({"k0", 400.0});
  in.network.lines.push_back({"tr", "k0", 0.01, 0.0, 100.0});
  in.network.known_loads["k0"] = "known";
  Eigen::VectorXd known(steps);
  for (int t = 0; t < steps; ++t) known[t] = 300.0 * rng.uniform();
  in.inputs.known_w["k0"] = known;
  in.inputs.transformer_w = truth.colwise().sum().transpose() + known;
  for (int t = 0; t < steps; ++t) in.inputs.transformer_w[t] *= 0.995 + 0.01 * rng.uniform();
  return in;
}

}  // namespace testing

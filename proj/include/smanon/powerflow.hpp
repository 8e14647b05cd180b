#pragma once

#include <complex>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "smanon/model.hpp"

namespace smanon {

/// Active-power series per bus. Reactive power follows from the power factor.
struct LoadAssignment {
  std::map<std::string, Eigen::VectorXd> bus_power_w;
  double power_factor = 1.0;
  std::map<std::string, double> power_factor_by_bus;
};

struct PowerFlowOptions {
  double tol = 1e-8;     // convergence flag threshold on max |dV|, pu
  int max_iter = 100;
  double s_base_va = 1e6;
  bool warm_start = true;
  int jobs = 1;          // > 1 implies cold starts
};

struct TimestepSolution {
  Eigen::VectorXcd v_pu;      // per bus, network order
  Eigen::VectorXcd i_pu;      // per line, network order, flowing away from the transformer
  Eigen::VectorXd i_a;
  std::complex<double> s_slack_va;
  int iterations = 0;
  bool converged = false;
};

struct PowerFlowResult {
  Eigen::MatrixXd v_pu;       // [buses x T]
  Eigen::MatrixXd i_a;        // [lines x T]
  Eigen::VectorXd p_trafo_w;
  std::vector<char> converged;

  int n_nonconverged() const;
};

/// Precomputed radial topology and per-unit impedances of one network.
class RadialSolver {
 public:
  explicit RadialSolver(const Network& network, double s_base_va = 1e6);

  /// `s_va` holds complex load power per bus in VA (network bus order). `warm` may be null.
  TimestepSolution solve(const Eigen::VectorXcd& s_va, const Eigen::VectorXcd* warm,
                         const PowerFlowOptions& opts) const;

  /// Columns of `p_w` are timesteps, rows follow the network bus order.
  PowerFlowResult solve_series(const Eigen::MatrixXd& p_w, const Eigen::VectorXd& tan_phi,
                               const PowerFlowOptions& opts) const;

  int n_buses() const { return static_cast<int>(parent_.size()); }
  int n_lines() const { return static_cast<int>(z_.size()); }
  int slack() const { return slack_; }
  /// Per-unit series impedance of line `l` on its receiving-end base.
  std::complex<double> z_pu(int line) const { return z_[static_cast<std::size_t>(line)]; }
  /// Parent bus and child bus of line `l` as oriented away from the transformer.
  std::pair<int, int> line_ends(int line) const { return ends_[static_cast<std::size_t>(line)]; }
  double s_base_va() const { return s_base_; }
  double i_base_a(int line) const { return i_base_[static_cast<std::size_t>(line)]; }

 private:
  double s_base_;
  int slack_ = 0;
  std::vector<int> parent_;         // parent bus, -1 at the slack
  std::vector<int> line_of_bus_;    // line feeding each bus, -1 at the slack; sized B
  std::vector<int> order_;          // breadth-first from the slack
  std::vector<std::complex<double>> z_;
  std::vector<std::pair<int, int>> ends_;
  std::vector<double> i_base_;
};

/// Loads as complex power per bus id, in VA.
TimestepSolution solve_timestep(const Network& network,
                                const std::map<std::string, std::complex<double>>& loads_va,
                                const PowerFlowOptions& opts = {});

/// Runs every timestep of `loads`; buses absent from the assignment carry no load.
PowerFlowResult solve_series(const Network& network, const LoadAssignment& loads,
                             const PowerFlowOptions& opts = {});

/// Bus-ordered load matrix and tan(phi) vector for a LoadAssignment.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> load_matrix(const Network& network,
                                                        const LoadAssignment& loads);

}  // namespace smanon

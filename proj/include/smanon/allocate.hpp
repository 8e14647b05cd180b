#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "smanon/model.hpp"

namespace smanon {

struct AllocationConfig {
  double eps_energy = 0.05;
  double eps_power = 0.01;
  /// Maximum number of allocations per database profile; categories missing here use
  /// ceil(|N_L^h| / |J^h|).
  std::map<LoadCategory, int> k_per_category;
};

/// k^h = ceil(|N_L^h| / |J^h|) for every category present among the unknown loads.
std::map<LoadCategory, int> default_k(const Network& network, const LoadDatabase& db);

struct Stage1Result {
  std::vector<int> assignment;  // unknown-load index -> database index
  Eigen::VectorXd scale;        // beta of the chosen pair
  Eigen::VectorXd e_ref;        // E^ref_n of each unknown load
  Eigen::VectorXd e_org;        // E^ref_j of the chosen profile
  Eigen::VectorXd e_var;        // beta * E^ref_j
  std::map<LoadCategory, int> k_used;
  double objective = 0.0;       // sum_n (E^org_n - E^var_n)^2, J^2
};

/// Optimal energy allocation for one (node, candidate) pair: E^var is E^ref_j clamped to the
/// node's tolerance interval. Returns the squared deviation in J^2, or +inf when no positive
/// scale can reach the interval.
double pair_cost(double e_node, double e_candidate, double eps_energy, double* e_var = nullptr);

/// Category-pure capacitated assignment of database profiles to unknown loads, solved exactly as
/// a transportation problem by min-cost flow.
Stage1Result stage1_allocate(const Network& network, const LoadDatabase& db, const TimeGrid& grid,
                             const AllocationConfig& cfg);

struct ProjectionOptions {
  double tol = 1e-6;
  int max_sweeps = 20000;
};

/// Target sets of the stage-2 projection over a [nodes x T] matrix: column sums in
/// [col_lo, col_hi], row sums times `step` in [row_lo, row_hi], entries non-negative, and
/// entries pinned at zero where `pinned` is set.
struct BandConstraints {
  Eigen::VectorXd col_lo, col_hi;
  Eigen::VectorXd col_ref;  // per-column reference for relative violations
  Eigen::VectorXd row_lo, row_hi;
  Eigen::VectorXd row_ref;
  double step = 1.0;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> pinned;
};

struct ProjectionResult {
  Eigen::MatrixXd x;
  double max_violation = 0.0;
  int sweeps = 0;
  bool converged = false;
};

/// Worst relative violation of the column and row bands.
double max_relative_violation(const Eigen::MatrixXd& x, const BandConstraints& c);

/// Euclidean projection of `x0` onto the intersection of the bands and the orthant by Dykstra's
/// alternating projections (column family, row family, orthant).
ProjectionResult dykstra_project(const Eigen::MatrixXd& x0, const BandConstraints& c,
                                 const ProjectionOptions& opts = {});

/// Measured series the second stage matches against.
struct Stage2Inputs {
  Eigen::VectorXd transformer_w;                      // P^ref at the transformer
  std::map<std::string, Eigen::VectorXd> known_w;     // bus -> measured series (N_K)
};

struct Stage2Result {
  Eigen::MatrixXd gamma;
  Eigen::MatrixXd p_org;
  Eigen::MatrixXd p_var;
  Eigen::VectorXd p_var_trafo;
  Eigen::VectorXd e_var;
  double objective = 0.0;
  double max_violation = 0.0;
  int sweeps = 0;
  bool converged = false;
};

Stage2Result stage2_tune(const Network& network, const LoadDatabase& db, const TimeGrid& grid,
                         const Stage1Result& s1, const Stage2Inputs& inputs,
                         const AllocationConfig& cfg, const ProjectionOptions& opts = {});

struct AllocationOutcome {
  Stage1Result stage1;
  Stage2Result stage2;
  std::map<std::string, Eigen::VectorXd> bus_power_w;  // known and allocated loads
};

AllocationOutcome allocation_pipeline(const Network& network, const LoadDatabase& db,
                                      const TimeGrid& grid, const Stage2Inputs& inputs,
                                      const AllocationConfig& cfg,
                                      const ProjectionOptions& opts = {});

}  // namespace smanon

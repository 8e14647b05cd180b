#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "smanon/graph.hpp"
#include "smanon/model.hpp"

namespace smanon {

struct FeatureMatrix {
  std::vector<std::string> meter_ids;
  Eigen::MatrixXd values;  // records x features
  std::vector<std::string> feature_names;
};

enum class Scenario { EnergyMaxP, Energy, PCA, Affinity, OneGroup };

inline constexpr Scenario kAllScenarios[] = {Scenario::EnergyMaxP, Scenario::Energy, Scenario::PCA,
                                             Scenario::Affinity, Scenario::OneGroup};

std::string_view to_string(Scenario s);
Scenario parse_scenario(std::string_view text);

struct ScenarioSpec {
  Scenario kind = Scenario::EnergyMaxP;
  double pca_variance_target = 0.99;
};

/// Energy over the grid in joules: sum_t P_t * step.
double annual_energy(const LoadProfile& profile, const TimeGrid& grid);
double max_power(const LoadProfile& profile);

/// Names of the consumption statistics fed into the PCA scenario.
std::vector<std::string> pca_base_feature_names();
/// The PCA scenario's base statistics, one row per profile (not normalised).
Eigen::MatrixXd pca_base_features(std::span<const LoadProfile> profiles, const TimeGrid& grid);

struct PcaProjection {
  Eigen::MatrixXd scores;           // records x retained components
  Eigen::VectorXd explained;        // eigenvalues of the feature covariance, descending
  int retained = 0;
  double retained_fraction = 0.0;   // cumulative explained variance of the retained components
};

/// Principal components of the column-standardised input, keeping the fewest components whose
/// cumulative explained variance reaches `variance_target`.
PcaProjection principal_components(const Eigen::MatrixXd& x, double variance_target);

FeatureMatrix build_features(std::span<const LoadProfile> profiles, const TimeGrid& grid,
                             const ScenarioSpec& spec);

/// Zero mean and unit sample standard deviation per column. Constant columns become zero and a
/// message is appended to `warnings` when given.
FeatureMatrix zscore_normalize(const FeatureMatrix& m, std::vector<std::string>* warnings = nullptr);

/// Euclidean distances between the rows of `x`.
template <typename Derived>
Eigen::MatrixXd pairwise_distances(const Eigen::MatrixBase<Derived>& x) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index u = 0; u < n; ++u)
    for (Eigen::Index v = u + 1; v < n; ++v) d(u, v) = d(v, u) = (x.row(u) - x.row(v)).norm();
  return d;
}

SimilarityGraph distance_matrix(const FeatureMatrix& m);

/// Replaces each weight D by 1/D, clamped to `cap` where D < 1/cap.
SimilarityGraph affinity_matrix(const SimilarityGraph& g, double cap);

std::string feature_matrix_csv(const FeatureMatrix& m);
std::string distance_matrix_csv(const SimilarityGraph& g);

}  // namespace smanon

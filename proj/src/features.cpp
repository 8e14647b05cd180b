#include "smanon/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

namespace smanon {

namespace {

constexpr int kNightEndSecond = 6 * 3600;

void check_aligned(const LoadProfile& p, const TimeGrid& grid) {
  if (static_cast<std::size_t>(p.power_w.size()) != grid.size())
    throw Error("profile '" + p.meter_id + "' is not aligned to the time grid");
}

double sample_variance(const Eigen::VectorXd& v) {
  if (v.size() < 2) return 0.0;
  return (v.array() - v.mean()).square().sum() / static_cast<double>(v.size() - 1);
}

double lag1_autocorrelation(const Eigen::VectorXd& v) {
  if (v.size() < 3) return 0.0;
  const Eigen::ArrayXd c = v.array() - v.mean();
  const double denom = c.square().sum();
  if (denom <= 0.0) return 0.0;
  const Eigen::Index n = v.size();
  return (c.head(n - 1) * c.tail(n - 1)).sum() / denom;
}

// Flips each column so its largest-magnitude entry is positive.
void normalise_signs(Eigen::MatrixXd& vectors) {
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    Eigen::Index arg = 0;
    vectors.col(c).cwiseAbs().maxCoeff(&arg);
    if (vectors(arg, c) < 0.0) vectors.col(c) *= -1.0;
  }
}

}  // namespace

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::EnergyMaxP: return "EnergyMaxP";
    case Scenario::Energy: return "Energy";
    case Scenario::PCA: return "PCA";
    case Scenario::Affinity: return "Affinity";
    case Scenario::OneGroup: return "OneGroup";
  }
  return "?";
}

Scenario parse_scenario(std::string_view text) {
  std::string s(text);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "energymaxp" || s == "e+maxp" || s == "energy_maxp") return Scenario::EnergyMaxP;
  if (s == "energy") return Scenario::Energy;
  if (s == "pca") return Scenario::PCA;
  if (s == "affinity") return Scenario::Affinity;
  if (s == "onegroup" || s == "one_group") return Scenario::OneGroup;
  throw Error("unknown scenario '" + std::string(text) + "'");
}

double annual_energy(const LoadProfile& profile, const TimeGrid& grid) {
  check_aligned(profile, grid);
  return profile.power_w.sum() * grid.step_seconds();
}

double max_power(const LoadProfile& profile) {
  if (profile.power_w.size() == 0) throw Error("empty profile '" + profile.meter_id + "'");
  return profile.power_w.maxCoeff();
}

std::vector<std::string> pca_base_feature_names() {
  return {"energy_j",       "max_power_w",     "min_power_w",         "mean_max_ratio",
          "daily_mean_var", "night_day_ratio", "weekday_weekend_ratio", "daily_energy_acf1"};
}

Eigen::MatrixXd pca_base_features(std::span<const LoadProfile> profiles, const TimeGrid& grid) {
  // Day buckets shared by every profile.
  std::vector<int> day_of(grid.size());
  std::map<long long, int> day_index;
  std::vector<bool> day_is_weekend;
  for (std::size_t t = 0; t < grid.size(); ++t) {
    const long long day = std::chrono::floor<std::chrono::days>(grid[t]).time_since_epoch().count();
    auto [it, inserted] = day_index.emplace(day, static_cast<int>(day_index.size()));
    if (inserted) day_is_weekend.push_back(grid.weekday(t) >= 5);
    day_of[t] = it->second;
  }
  const auto n_days = static_cast<Eigen::Index>(day_index.size());
  const double dt = grid.step_seconds();

  Eigen::MatrixXd out(static_cast<Eigen::Index>(profiles.size()), 8);
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    const auto& p = profiles[i];
    check_aligned(p, grid);
    const Eigen::VectorXd& x = p.power_w;
    Eigen::VectorXd day_energy = Eigen::VectorXd::Zero(n_days);
    Eigen::VectorXd day_count = Eigen::VectorXd::Zero(n_days);
    double night = 0.0, rest = 0.0;
    for (std::size_t t = 0; t < grid.size(); ++t) {
      const double e = x[static_cast<Eigen::Index>(t)] * dt;
      day_energy[day_of[t]] += e;
      day_count[day_of[t]] += 1.0;
      (grid.second_of_day(t) < kNightEndSecond ? night : rest) += e;
    }
    double wd = 0.0, we = 0.0;
    int n_wd = 0, n_we = 0;
    for (Eigen::Index d = 0; d < n_days; ++d) {
      if (day_is_weekend[static_cast<std::size_t>(d)]) {
        we += day_energy[d];
        ++n_we;
      } else {
        wd += day_energy[d];
        ++n_wd;
      }
    }
    const Eigen::VectorXd daily_mean = day_energy.cwiseQuotient(day_count * dt);
    const double energy = x.sum() * dt;
    const double pmax = x.maxCoeff();
    out(static_cast<Eigen::Index>(i), 0) = energy;
    out(static_cast<Eigen::Index>(i), 1) = pmax;
    out(static_cast<Eigen::Index>(i), 2) = x.minCoeff();
    out(static_cast<Eigen::Index>(i), 3) = pmax > 0.0 ? x.mean() / pmax : 0.0;
    out(static_cast<Eigen::Index>(i), 4) = sample_variance(daily_mean);
    out(static_cast<Eigen::Index>(i), 5) = rest > 0.0 ? night / rest : 0.0;
    out(static_cast<Eigen::Index>(i), 6) =
        (n_wd > 0 && n_we > 0 && we > 0.0) ? (wd / n_wd) / (we / n_we) : 1.0;
    out(static_cast<Eigen::Index>(i), 7) = lag1_autocorrelation(day_energy);
  }
  return out;
}

PcaProjection principal_components(const Eigen::MatrixXd& x, double variance_target) {
  if (x.rows() < 2) throw Error("PCA requires at least two records");
  if (!(variance_target > 0.0 && variance_target <= 1.0))
    throw Error("PCA variance target must lie in (0, 1]");
  FeatureMatrix tmp{std::vector<std::string>(static_cast<std::size_t>(x.rows())), x, {}};
  const Eigen::MatrixXd z = zscore_normalize(tmp).values;
  const Eigen::MatrixXd cov = (z.transpose() * z) / static_cast<double>(x.rows() - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.info() != Eigen::Success) throw Error("PCA eigen-decomposition failed");
  // Eigen returns ascending eigenvalues.
  Eigen::VectorXd values = es.eigenvalues().reverse().cwiseMax(0.0);
  Eigen::MatrixXd vectors = es.eigenvectors().rowwise().reverse();
  normalise_signs(vectors);

  PcaProjection out;
  out.explained = values;
  const double total = values.sum();
  int keep = 1;
  double cum = values[0];
  if (total > 0.0) {
    while (keep < values.size() && cum < variance_target * total * (1.0 - 1e-12)) cum += values[keep++];
    out.retained_fraction = cum / total;
  } else {
    out.retained_fraction = 1.0;
  }
  out.retained = keep;
  out.scores = z * vectors.leftCols(keep);
  return out;
}

FeatureMatrix build_features(std::span<const LoadProfile> profiles, const TimeGrid& grid,
                             const ScenarioSpec& spec) {
  if (profiles.empty()) throw Error("feature extraction needs at least one profile");
  FeatureMatrix m;
  for (const auto& p : profiles) m.meter_ids.push_back(p.meter_id);
  const auto n = static_cast<Eigen::Index>(profiles.size());

  switch (spec.kind) {
    case Scenario::Energy:
      m.values.resize(n, 1);
      for (Eigen::Index i = 0; i < n; ++i) m.values(i, 0) = annual_energy(profiles[static_cast<std::size_t>(i)], grid);
      m.feature_names = {"energy_j"};
      break;
    case Scenario::PCA: {
      auto pca = principal_components(pca_base_features(profiles, grid), spec.pca_variance_target);
      m.values = std::move(pca.scores);
      for (int c = 0; c < pca.retained; ++c) m.feature_names.push_back("pc" + std::to_string(c + 1));
      break;
    }
    case Scenario::EnergyMaxP:
    case Scenario::Affinity:
    case Scenario::OneGroup:
      m.values.resize(n, 2);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto& p = profiles[static_cast<std::size_t>(i)];
        m.values(i, 0) = annual_energy(p, grid);
        m.values(i, 1) = max_power(p);
      }
      m.feature_names = {"energy_j", "max_power_w"};
      break;
  }
  if (!m.values.allFinite()) throw Error("non-finite feature value");
  return m;
}

FeatureMatrix zscore_normalize(const FeatureMatrix& m, std::vector<std::string>* warnings) {
  FeatureMatrix out = m;
  const Eigen::Index n = m.values.rows();
  for (Eigen::Index c = 0; c < m.values.cols(); ++c) {
    auto col = out.values.col(c);
    const double mean = col.mean();
    col.array() -= mean;
    const double sd = n > 1 ? std::sqrt(col.squaredNorm() / static_cast<double>(n - 1)) : 0.0;
    // Relative test so that round-off around a constant column does not get amplified.
    if (sd <= 1e-12 * std::max(1.0, std::abs(mean))) {
      col.setZero();
      if (warnings) {
        const std::string name = static_cast<std::size_t>(c) < m.feature_names.size()
                                     ? m.feature_names[static_cast<std::size_t>(c)]
                                     : "column " + std::to_string(c);
        warnings->push_back("feature '" + name + "' is constant; normalised to zero");
      }
    } else {
      col /= sd;
    }
  }
  return out;
}

SimilarityGraph distance_matrix(const FeatureMatrix& m) {
  return SimilarityGraph::complete(m.meter_ids, pairwise_distances(m.values));
}

SimilarityGraph affinity_matrix(const SimilarityGraph& g, double cap) {
  if (!(cap > 0.0)) throw Error("affinity cap must be positive");
  SimilarityGraph a = g;
  for (Eigen::Index u = 0; u < a.weights.rows(); ++u)
    for (Eigen::Index v = 0; v < a.weights.cols(); ++v) {
      if (u == v || !a.edges(u, v)) {
        a.weights(u, v) = 0.0;
        continue;
      }
      const double d = g.weights(u, v);
      a.weights(u, v) = d * cap <= 1.0 ? cap : 1.0 / d;
    }
  return a;
}

std::string feature_matrix_csv(const FeatureMatrix& m) {
  std::string out = "meter_id";
  for (const auto& f : m.feature_names) out += "," + f;
  out += '\n';
  for (Eigen::Index i = 0; i < m.values.rows(); ++i) {
    out += m.meter_ids[static_cast<std::size_t>(i)];
    for (Eigen::Index c = 0; c < m.values.cols(); ++c) out += "," + format_double(m.values(i, c));
    out += '\n';
  }
  return out;
}

std::string distance_matrix_csv(const SimilarityGraph& g) {
  std::string out = "id";
  for (const auto& id : g.node_ids) out += "," + id;
  out += '\n';
  for (int i = 0; i < g.size(); ++i) {
    out += g.node_ids[static_cast<std::size_t>(i)];
    for (int j = 0; j < g.size(); ++j) out += "," + format_double(g.weights(i, j));
    out += '\n';
  }
  return out;
}

}  // namespace smanon

#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "smanon/features.hpp"

using namespace smanon;

namespace {

std::vector<LoadProfile> noisy_profiles(int n, std::size_t steps, Rng& rng) {
  std::vector<LoadProfile> ps;
  for (int i = 0; i < n; ++i) {
    LoadProfile p;
    p.meter_id = "m" + std::to_string(i);
    p.power_w.resize(static_cast<Eigen::Index>(steps));
    const double level = 200.0 + 800.0 * rng.uniform();
    for (std::size_t t = 0; t < steps; ++t)
      p.power_w[static_cast<Eigen::Index>(t)] = level * (1.0 + 0.5 * std::sin(0.1 * static_cast<double>(t) * (1 + i % 3))) +
                                                50.0 * rng.uniform();
    ps.push_back(std::move(p));
  }
  return ps;
}

}  // namespace

TEST_CASE("energy and max power") {
  const auto g = testing::grid_of(4);
  LoadProfile p{"m", LoadCategory::House, Eigen::Vector4d(100, 200, 300, 400), 1};
  CHECK(annual_energy(p, g) == doctest::Approx(1000.0 * 900.0));
  CHECK(max_power(p) == 400.0);
  const auto f = build_features(std::span(&p, 1), g, {Scenario::EnergyMaxP});
  CHECK(f.values.cols() == 2);
  CHECK(f.values(0, 1) == 400.0);
  CHECK(build_features(std::span(&p, 1), g, {Scenario::Energy}).values.cols() == 1);
}

TEST_CASE("scenario names round trip") {
  for (auto s : kAllScenarios) CHECK(parse_scenario(to_string(s)) == s);
  CHECK_THROWS_AS(parse_scenario("bogus"), Error);
}

TEST_CASE("z-score normalisation") {
  FeatureMatrix m{{"a", "b", "c"}, Eigen::MatrixXd(3, 2), {"x", "y"}};
  m.values << 1, 5, 2, 5, 3, 5;
  std::vector<std::string> warnings;
  const auto z = zscore_normalize(m, &warnings);
  CHECK(z.values.col(0).mean() == doctest::Approx(0.0));
  CHECK(z.values(2, 0) == doctest::Approx(1.0));
  CHECK(z.values.col(1).isZero());
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("'y'") != std::string::npos);
}

TEST_CASE("PCA reaches the variance target and is orthogonal") {
  Rng rng(11);
  const auto g = testing::grid_of(7 * 96);
  const auto ps = noisy_profiles(20, g.size(), rng);
  const auto base = pca_base_features(ps, g);
  CHECK(base.cols() == static_cast<Eigen::Index>(pca_base_feature_names().size()));
  const auto pca = principal_components(base, 0.99);
  CHECK(pca.retained_fraction >= 0.99);
  CHECK(pca.retained >= 1);
  if (pca.retained > 1) {
    const Eigen::MatrixXd gram = pca.scores.transpose() * pca.scores;
    const double off = (gram - Eigen::MatrixXd(gram.diagonal().asDiagonal())).cwiseAbs().maxCoeff();
    CHECK(off < 1e-8 * gram.diagonal().maxCoeff());
  }
  // Explained variance is sorted and its total equals the number of standardised columns
  // that are not constant.
  for (Eigen::Index i = 1; i < pca.explained.size(); ++i) CHECK(pca.explained[i] <= pca.explained[i - 1] + 1e-12);
  CHECK_THROWS_WITH_AS(principal_components(base.topRows(1), 0.99), doctest::Contains("at least two records"), Error);
}

TEST_CASE("distance and affinity matrices") {
  FeatureMatrix m{{"a", "b", "c"}, Eigen::MatrixXd(3, 2), {"x", "y"}};
  m.values << 0, 0, 3, 4, 0, 1e-12;
  const auto d = distance_matrix(m);
  CHECK(d.weights(0, 1) == doctest::Approx(5.0));
  CHECK(d.is_complete());
  const auto a = affinity_matrix(d, 1e9);
  CHECK(a.weights(0, 1) == doctest::Approx(0.2));
  CHECK(a.weights(0, 2) == 1e9);
  CHECK(a.weights(1, 1) == 0.0);
}

#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "smanon/bench.hpp"

using namespace smanon;

namespace {

PowerFlowResult flat(Eigen::Index buses, Eigen::Index lines, Eigen::Index steps, double v = 1.0) {
  PowerFlowResult r;
  r.v_pu = Eigen::MatrixXd::Constant(buses, steps, v);
  r.i_a = Eigen::MatrixXd::Constant(lines, steps, 10.0);
  r.p_trafo_w = Eigen::VectorXd::Constant(steps, 100.0);
  r.converged.assign(static_cast<std::size_t>(steps), 1);
  return r;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

SynthSpec small_spec() {
  auto s = SynthSpec::reference();
  s.days = 1;
  s.networks.resize(2);
  return s;
}

}  // namespace

TEST_CASE("KPI identities") {
  Rng rng(2);
  auto ref = flat(5, 4, 10);
  for (Eigen::Index i = 0; i < ref.v_pu.size(); ++i) ref.v_pu(i) = 0.97 + 0.03 * rng.uniform();
  const auto k = compute_kpis(ref, ref);
  CHECK(k.mse_vm == 0.0);
  CHECK(k.e_max_trl == 0.0);
  CHECK(k.e_max_lnl == 0.0);
  CHECK(k.e_min_vm == 0.0);

  auto off = ref;
  off.v_pu.array() += 1e-4;
  CHECK(kpi_mse_vm(off, ref) == doctest::Approx(1e-8).epsilon(1e-6));
  CHECK(kpi_mse_vm(off, ref, true) == doctest::Approx(1e-8 * 10).epsilon(1e-6));

  auto t = ref;
  t.p_trafo_w[3] = 110.0;
  t.i_a(2, 5) = 12.0;
  CHECK(kpi_max_trl(t, ref) == doctest::Approx(0.10));
  CHECK(kpi_max_lnl(t, ref) == doctest::Approx(0.20));
}

TEST_CASE("KPIs drop non-converged timesteps") {
  auto ref = flat(3, 2, 4);
  auto test = flat(3, 2, 4);
  test.v_pu.col(1).array() = 0.5;
  test.converged[1] = 0;
  const auto k = compute_kpis(test, ref);
  CHECK(k.mse_vm == 0.0);
  CHECK(k.dropped_timesteps == 1);
  CHECK_THROWS_AS(kpi_mse_vm(flat(3, 2, 5), ref), Error);
  auto zero = flat(3, 2, 4);
  zero.p_trafo_w.setZero();
  CHECK_THROWS_AS(kpi_max_trl(zero, zero), Error);
}

TEST_CASE("running statistics and slope") {
  std::vector<double> x{1, 3, 2, 6, 4};
  std::vector<double> mean, var;
  running_statistics(x, mean, var);
  CHECK(mean[4] == doctest::Approx(3.2));
  // s^2 = sum (x - 3.2)^2 / 4 = 14.8 / 4
  CHECK(var[4] == doctest::Approx(14.8 / 4.0 / 5.0));
  CHECK(std::isnan(var[0]));
  std::vector<double> inv;
  for (int n = 1; n <= 200; ++n) inv.push_back(3.0 / n);
  CHECK(log_log_slope(inv) == doctest::Approx(-1.0));
}

TEST_CASE("synthetic energies follow the requested median") {
  std::vector<double> e;
  for (int i = 0; i < 51; ++i) e.push_back(synth_energy_quantile(i, 51, 4.5, 3.0));
  CHECK(median_of(e) == doctest::Approx(4.5).epsilon(1e-12));
  CHECK(std::is_sorted(e.begin(), e.end()));
}

TEST_CASE("six-network reference") {
  auto spec = SynthSpec::reference();
  spec.days = 7;
  REQUIRE(spec.networks.size() == 6);
  const auto ref = synth_reference(spec);
  CHECK(ref.grid.size() == 7 * 96);
  std::size_t total = 0;
  for (std::size_t n = 0; n < 6; ++n) {
    const auto& ns = spec.networks[n];
    const auto& table = ref.meters[n];
    int sum = 0;
    for (auto [cat, c] : ns.counts) sum += c;
    CHECK(table.profiles.size() == static_cast<std::size_t>(sum));
    total += table.profiles.size();
    for (auto [cat, c] : ns.counts) {
      std::vector<double> e;
      for (const auto& p : table.profiles)
        if (p.category == cat && p.customer_count == 1) e.push_back(p.power_w.sum() * 900.0 / 3.6e6 * 365.0 / 7.0);
      if (cat == LoadCategory::House && !e.empty()) CHECK(median_of(e) == doctest::Approx(ns.median_kwh.at(cat)).epsilon(0.05));
    }
    CHECK((ref.networks[n].buses.front().v_base_v) == 400.0);
  }
  CHECK(total == 257);
  CHECK(ref.database.entries.size() == 180);
}

TEST_CASE("synthetic reference is deterministic") {
  const auto a = synth_reference(small_spec());
  const auto b = synth_reference(small_spec());
  for (std::size_t n = 0; n < a.meters.size(); ++n) {
    CHECK(network_to_json(a.networks[n]) == network_to_json(b.networks[n]));
    for (std::size_t i = 0; i < a.meters[n].profiles.size(); ++i)
      CHECK(a.meters[n].profiles[i].power_w == b.meters[n].profiles[i].power_w);
  }
  auto other = small_spec();
  other.seed = 2;
  CHECK(synth_reference(other).meters[0].profiles[0].power_w != a.meters[0].profiles[0].power_w);
}

TEST_CASE("small study is reproducible") {
  const auto ref = synth_reference(small_spec());
  StudyOptions o;
  o.n_iter = 3;
  o.scenarios = {Scenario::Energy, Scenario::OneGroup};
  const auto r1 = run_study(ref, o);
  o.jobs = 2;
  const auto r2 = run_study(ref, o);
  CHECK(study_to_json(r1) == study_to_json(r2));
  REQUIRE(r1.scenarios.size() == 2);
  for (const auto& s : r1.scenarios) {
    CHECK(s.mse_per_iter.size() == 3);
    CHECK(s.cumulative_mse.back() == doctest::Approx(s.mse_mean));
  }
  CHECK(r1.has_allocation);
  CHECK(r1.allocation.errors.empty());
  CHECK(r1.allocation.max_balance_violation <= 1e-6);
  for (const auto& [net, v] : r1.reference_v_min) {
    CHECK(v >= 0.95);
    CHECK(r1.reference_v_max.at(net) <= 1.0);
  }
  CHECK(convergence_csv(r1).find("iteration") != std::string::npos);
}

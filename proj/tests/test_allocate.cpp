#include <chrono>
#include <cmath>
#include <limits>

#include "doctest.h"
#include "helpers.hpp"
#include "oracles/kkt.hpp"
#include "oracles/stage1_brute.hpp"
#include "smanon/allocate.hpp"

using namespace smanon;

namespace {

struct Stage1Instance {
  Network net;
  LoadDatabase db;
  TimeGrid grid = testing::grid_of(1);
  std::vector<double> e_node, e_cand;
  std::vector<int> node_cat, cand_cat;
};

Stage1Instance random_stage1(Rng& rng, int n_nodes, int n_cats, int max_cands) {
  Stage1Instance s;
  s.net.name = "s1";
  s.net.transformer_bus = "tr";
  s.net.buses.push_back({"tr", 400.0});
  for (int c = 0; c < n_cats; ++c) {
    const int n_c = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_cands)));
    for (int j = 0; j < n_c; ++j) {
      const double e = 1e9 * (0.5 + 4.0 * rng.uniform());
      LoadProfile p{"db" + std::to_string(s.db.entries.size()), kAllCategories[c], Eigen::VectorXd::Constant(1, e / 900.0), 1};
      s.db.entries.push_back(p);
      s.e_cand.push_back(900.0 * p.power_w[0]);
      s.cand_cat.push_back(c);
    }
  }
  for (int n = 0; n < n_nodes; ++n) {
    const int c = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_cats)));
    const std::string bus = "u" + std::to_string(n);
    s.net.buses.push_back({bus, 400.0});
    s.net.lines.push_back({"tr", bus, 0.01, 0.0, 100.0});
    const double e = 1e9 * (0.5 + 4.0 * rng.uniform());
    s.net.unknown_loads.push_back({bus, e, kAllCategories[c]});
    s.e_node.push_back(e);
    s.node_cat.push_back(c);
  }
  return s;
}

oracle::KktInput kkt_input(const Stage2Result& r, const BandConstraints& c) {
  return {r.p_org, c.col_lo, c.col_hi, c.row_lo, c.row_hi, c.step, c.pinned};
}

BandConstraints bands_of(const testing::Stage2Instance& in, const AllocationConfig& cfg, const Eigen::MatrixXd& p_org) {
  BandConstraints c;
  c.step = in.grid.step_seconds();
  Eigen::VectorXd known = in.inputs.known_w.at("k0");
  c.col_lo = (1.0 - cfg.eps_power) * in.inputs.transformer_w - known;
  c.col_hi = (1.0 + cfg.eps_power) * in.inputs.transformer_w - known;
  c.col_ref = in.inputs.transformer_w;
  const auto N = static_cast<Eigen::Index>(in.network.unknown_loads.size());
  c.row_ref.resize(N);
  for (Eigen::Index n = 0; n < N; ++n) c.row_ref[n] = in.network.unknown_loads[static_cast<std::size_t>(n)].energy_j;
  c.row_lo = (1.0 - cfg.eps_energy) * c.row_ref;
  c.row_hi = (1.0 + cfg.eps_energy) * c.row_ref;
  c.pinned = p_org.array() <= 0.0;
  return c;
}

}  // namespace

TEST_CASE("pair cost clamps to the tolerance interval") {
  double v = 0.0;
  CHECK(pair_cost(100.0, 100.0, 0.05, &v) == 0.0);
  CHECK(pair_cost(100.0, 120.0, 0.05, &v) == doctest::Approx(225.0));
  CHECK(v == doctest::Approx(105.0));
  CHECK(pair_cost(100.0, 50.0, 0.05, &v) == doctest::Approx(45.0 * 45.0));
  CHECK(pair_cost(100.0, 0.0, 0.05) == std::numeric_limits<double>::infinity());
  CHECK(pair_cost(100.0, 0.0, 1.0) == 0.0);
  for (double e : {10.0, 80.0, 100.0, 300.0})
    CHECK(pair_cost(100.0, e, 0.05) == doctest::Approx(oracle::pair_cost_search(100.0, e, 0.05)).epsilon(1e-9));
}

TEST_CASE("stage 1 matches brute force") {
  Rng rng(101);
  for (int rep = 0; rep < 30; ++rep) {
    const double eps = rep % 3 == 0 ? 1.0 : 0.05 + 0.3 * rng.uniform();
    const int n_nodes = 1 + static_cast<int>(rng.below(6));
    const int n_cats = 1 + static_cast<int>(rng.below(3));
    auto s = random_stage1(rng, n_nodes, n_cats, 5);
    AllocationConfig cfg;
    cfg.eps_energy = eps;
    std::map<LoadCategory, int> k;
    try {
      k = default_k(s.net, s.db);
    } catch (const Error&) {
      continue;  // a category without candidates
    }
    std::vector<int> kv(3, 0);
    for (auto [cat, v] : k) kv[static_cast<std::size_t>(cat)] = v;
    std::vector<int> node_cat = s.node_cat, cand_cat = s.cand_cat;
    for (auto& c : node_cat) c = static_cast<int>(kAllCategories[c]);
    for (auto& c : cand_cat) c = static_cast<int>(kAllCategories[c]);
    const auto brute = oracle::stage1_brute(s.e_node, node_cat, s.e_cand, cand_cat, kv, eps);
    if (!std::isfinite(brute.cost)) {
      CHECK_THROWS_AS(stage1_allocate(s.net, s.db, s.grid, cfg), Error);
      continue;
    }
    const auto r = stage1_allocate(s.net, s.db, s.grid, cfg);
    CHECK(r.objective == doctest::Approx(brute.cost).epsilon(1e-9).scale(1e18));
    std::vector<int> used(s.db.entries.size(), 0);
    for (std::size_t n = 0; n < s.e_node.size(); ++n) {
      const int j = r.assignment[n];
      REQUIRE(j >= 0);
      CHECK(s.db.entries[static_cast<std::size_t>(j)].category == s.net.unknown_loads[n].category);
      ++used[static_cast<std::size_t>(j)];
      const auto i = static_cast<Eigen::Index>(n);
      CHECK(r.e_var[i] >= (1.0 - eps) * s.e_node[n]);
      CHECK(r.e_var[i] <= (1.0 + eps) * s.e_node[n]);
      CHECK(r.scale[i] > 0.0);
    }
    for (std::size_t j = 0; j < used.size(); ++j) CHECK(used[j] <= kv[static_cast<std::size_t>(s.db.entries[j].category)]);
  }
}

TEST_CASE("stage 1 errors") {
  Rng rng(7);
  auto s = random_stage1(rng, 4, 1, 1);
  AllocationConfig cfg;
  cfg.k_per_category[LoadCategory::Apartment] = 1;
  CHECK_THROWS_WITH_AS(stage1_allocate(s.net, s.db, s.grid, cfg), doctest::Contains("infeasible capacities"), Error);
  cfg = {};
  cfg.eps_energy = -0.1;
  CHECK_THROWS_WITH_AS(stage1_allocate(s.net, s.db, s.grid, cfg), doctest::Contains("empty tolerance interval"), Error);
  s.db.entries.clear();
  CHECK_THROWS_WITH_AS(stage1_allocate(s.net, s.db, s.grid, {}), doctest::Contains("no database profile"), Error);
}

TEST_CASE("stage 2 feasibility and KKT") {
  Rng rng(23);
  for (int rep = 0; rep < 20; ++rep) {
    const int nodes = 1 + static_cast<int>(rng.below(5));
    const int steps = 4 + static_cast<int>(rng.below(93));
    auto in = testing::random_stage2(nodes, steps, rng);
    AllocationConfig cfg;
    const auto r = stage2_tune(in.network, in.db, in.grid, in.s1, in.inputs, cfg);
    CHECK(r.converged);
    CHECK(r.max_violation < 1e-6);
    const auto c = bands_of(in, cfg, r.p_org);
    CHECK(max_relative_violation(r.p_var, c) == doctest::Approx(r.max_violation));
    const auto kkt = oracle::check_kkt(r.p_var, kkt_input(r, c));
    CHECK(kkt.stationarity < 1e-6);
    CHECK(kkt.sign < 1e-6);
    CHECK(kkt.primal < 1e-6);
    CHECK((r.p_var.array() >= 0.0).all());
    CHECK((c.pinned).select(r.p_var, 0.0).isZero());
  }
}

TEST_CASE("stage 2 beats feasible samples") {
  // Rectangle moves keep every row and column sum, so they stay feasible while entries remain
  // non-negative; none may move closer to P_org than the projection.
  Rng rng(5);
  auto in = testing::random_stage2(3, 12, rng, 0.0);
  AllocationConfig cfg;
  const auto r = stage2_tune(in.network, in.db, in.grid, in.s1, in.inputs, cfg);
  const auto c = bands_of(in, cfg, r.p_org);
  int tried = 0;
  for (int s = 0; s < 5000; ++s) {
    Eigen::MatrixXd x = r.p_var;
    for (int m = 0; m < 3; ++m) {
      const auto n1 = static_cast<Eigen::Index>(rng.below(3)), n2 = (n1 + 1 + static_cast<Eigen::Index>(rng.below(2))) % 3;
      const auto t1 = static_cast<Eigen::Index>(rng.below(12)), t2 = (t1 + 1 + static_cast<Eigen::Index>(rng.below(11))) % 12;
      const double room = std::min({x(n1, t1), x(n2, t2), x(n1, t2), x(n2, t1)});
      const double d = room * (2.0 * rng.uniform() - 1.0);
      x(n1, t1) += d;
      x(n2, t2) += d;
      x(n1, t2) -= d;
      x(n2, t1) -= d;
    }
    if ((x.array() < 0.0).any()) continue;
    CHECK(max_relative_violation(x, c) <= r.max_violation + 1e-12);
    ++tried;
    CHECK((x - r.p_org).squaredNorm() >= r.objective * (1.0 - 1e-9));
  }
  CHECK(tried > 1000);
}

TEST_CASE("stage 2 identities") {
  Rng rng(9);
  auto in = testing::random_stage2(4, 24, rng);
  AllocationConfig cfg;
  const auto r = stage2_tune(in.network, in.db, in.grid, in.s1, in.inputs, cfg);
  const Eigen::VectorXd expect = r.p_var.colwise().sum().transpose() + in.inputs.known_w.at("k0");
  CHECK((r.p_var_trafo - expect).cwiseAbs().maxCoeff() < 1e-9);
  const Eigen::VectorXd rel = (r.p_var_trafo - in.inputs.transformer_w).cwiseQuotient(in.inputs.transformer_w);
  CHECK(rel.cwiseAbs().maxCoeff() <= cfg.eps_power * (1.0 + 1e-6));
  CHECK(r.e_var.size() == 4);

  SUBCASE("no unknown loads") {
    auto net = in.network;
    net.unknown_loads.clear();
    Stage1Result s1;
    Stage2Inputs ins = in.inputs;
    ins.transformer_w = ins.known_w.at("k0");
    const auto e = stage2_tune(net, in.db, in.grid, s1, ins, cfg);
    CHECK(e.converged);
    CHECK(e.p_var_trafo == ins.known_w.at("k0"));
  }
  SUBCASE("eps of one is accepted") {
    cfg.eps_energy = 1.0;
    cfg.eps_power = 1.0;
    CHECK_NOTHROW(stage2_tune(in.network, in.db, in.grid, in.s1, in.inputs, cfg));
  }
  SUBCASE("known load above the band") {
    in.inputs.known_w["k0"][3] = 10.0 * in.inputs.transformer_w[3];
    CHECK_THROWS_WITH_AS(stage2_tune(in.network, in.db, in.grid, in.s1, in.inputs, cfg),
                         doctest::Contains("infeasible transformer band at timestep 3"), Error);
  }
}

TEST_CASE("dykstra on a hand-sized instance") {
  BandConstraints c;
  c.step = 1.0;
  c.col_lo = c.col_hi = Eigen::Vector2d(2.0, 2.0);
  c.col_ref = c.col_hi;
  c.row_lo = c.row_hi = Eigen::Vector2d(2.0, 2.0);
  c.row_ref = c.row_hi;
  c.pinned = Eigen::Array<bool, 2, 2>::Constant(false);
  Eigen::MatrixXd x0(2, 2);
  x0 << 2, 0, 0, 2;
  const auto r = dykstra_project(x0, c, {1e-10, 100000});
  CHECK(r.converged);
  CHECK(r.x.isApprox(x0));
  x0 << 3, 1, 1, 3;
  // The deviation is constant, which lies in the span of the sum constraints.
  const auto r2 = dykstra_project(x0, c, {1e-10, 100000});
  Eigen::MatrixXd expect(2, 2);
  expect << 2, 0, 0, 2;
  CHECK((r2.x - expect).cwiseAbs().maxCoeff() < 1e-8);
}

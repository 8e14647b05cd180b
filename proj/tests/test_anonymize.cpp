#include <algorithm>
#include <map>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "smanon/anonymize.hpp"

using namespace smanon;

namespace {

struct Fixture {
  TimeGrid grid = testing::grid_of(96);
  std::vector<LoadProfile> profiles;
  std::map<std::string, std::string> meter_bus;
  Network net;
};

Fixture fixture(int n_meters, int n_multi, Rng& rng) {
  Fixture f;
  f.net = testing::random_radial(n_meters + 1, rng);
  for (int i = 0; i < n_meters; ++i) {
    LoadProfile p;
    p.meter_id = "m" + std::to_string(i);
    p.customer_count = i < n_multi ? 4 : 1;
    p.power_w.resize(96);
    for (int t = 0; t < 96; ++t) p.power_w[t] = 100.0 * (1 + i) + 300.0 * rng.uniform();
    f.meter_bus[p.meter_id] = "b" + std::to_string(i + 1);
    f.profiles.push_back(std::move(p));
  }
  return f;
}

}  // namespace

TEST_CASE("exchange structure carries no meter-bus pairing") {
  Rng rng(3);
  auto f = fixture(14, 2, rng);
  GroupingOptions o;
  o.seed = 99;
  GroupingDetail d;
  const auto x = build_groups(f.profiles, f.grid, f.meter_bus, o, &d);
  CHECK_NOTHROW(x.validate());
  CHECK(x.fixed.size() == 2);
  CHECK(x.fixed.at("m0") == "b1");
  std::set<std::string> seen;
  for (const auto& g : x.groups) {
    CHECK(g.meters.size() >= 3);
    CHECK(g.meters.size() <= 5);
    CHECK(std::is_sorted(g.meters.begin(), g.meters.end()));
    std::set<std::string> true_buses;
    for (const auto& m : g.meters) {
      true_buses.insert(f.meter_bus.at(m));
      seen.insert(m);
    }
    CHECK(true_buses == std::set<std::string>(g.buses.begin(), g.buses.end()));
  }
  CHECK(seen.size() == 12);
  CHECK(d.partition.has_value());

  const auto back = parse_exchange_json(exchange_to_json(x));
  REQUIRE(back.groups.size() == x.groups.size());
  for (std::size_t i = 0; i < x.groups.size(); ++i) {
    CHECK(back.groups[i].meters == x.groups[i].meters);
    CHECK(back.groups[i].buses == x.groups[i].buses);
  }
  CHECK(back.fixed == x.fixed);
}

TEST_CASE("grouping errors") {
  Rng rng(4);
  auto f = fixture(4, 2, rng);
  GroupingOptions o;
  CHECK_THROWS_WITH_AS(build_groups(f.profiles, f.grid, f.meter_bus, o), doctest::Contains("fewer than k"), Error);
  o.k = 1;
  CHECK_THROWS_WITH_AS(build_groups(f.profiles, f.grid, f.meter_bus, o), doctest::Contains("at least 2"), Error);
  GroupExchange bad;
  bad.groups.push_back({"g1", {"a", "b"}, {"x"}});
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK_THROWS_AS(parse_exchange_json("{\"groups\": 3}"), Error);
}

TEST_CASE("one group scenario") {
  Rng rng(5);
  auto f = fixture(9, 0, rng);
  GroupingOptions o;
  o.scenario.kind = Scenario::OneGroup;
  const auto x = build_groups(f.profiles, f.grid, f.meter_bus, o);
  REQUIRE(x.groups.size() == 1);
  CHECK(x.groups[0].meters.size() == 9);
}

TEST_CASE("permutation uniformity for a group of three") {
  GroupExchange x;
  x.groups.push_back({"g1", {"a", "b", "c"}, {"x", "y", "z"}});
  std::map<std::string, int> counts;
  const int draws = 60000;
  for (int s = 0; s < draws; ++s) {
    const auto a = sample_assignment(x, static_cast<std::uint64_t>(s));
    counts[a.mapping.at("a") + a.mapping.at("b") + a.mapping.at("c")]++;
  }
  REQUIRE(counts.size() == 6);
  double chi2 = 0.0;
  const double expected = draws / 6.0;
  for (const auto& [perm, c] : counts) chi2 += (c - expected) * (c - expected) / expected;
  CHECK(chi2 < 15.086);  // chi-square, 5 dof, alpha 0.01
}

TEST_CASE("sampling and Monte Carlo are deterministic") {
  Rng rng(6);
  auto f = fixture(10, 1, rng);
  const auto x = build_groups(f.profiles, f.grid, f.meter_bus, {});
  const auto a = sample_assignment(x, 7), b = sample_assignment(x, 7);
  CHECK(a.mapping == b.mapping);
  CHECK(a.mapping.at("m0") == "b1");
  for (const auto& g : x.groups)
    for (const auto& m : g.meters)
      CHECK(std::find(g.buses.begin(), g.buses.end(), a.mapping.at(m)) != g.buses.end());

  ProfileTable table{f.grid, f.profiles};
  const auto r1 = monte_carlo(x, f.net, table, 4, 100);
  const auto r2 = monte_carlo(x, f.net, table, 4, 100);
  REQUIRE(r1.size() == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(r1[static_cast<std::size_t>(i)].sample.seed == 100u + static_cast<unsigned>(i));
    CHECK(r1[static_cast<std::size_t>(i)].flow.v_pu == r2[static_cast<std::size_t>(i)].flow.v_pu);
  }
}

TEST_CASE("realise sums meters that share a bus") {
  const auto g = testing::grid_of(2);
  ProfileTable t{g, {{"a", LoadCategory::House, Eigen::Vector2d(1, 2), 1}, {"b", LoadCategory::House, Eigen::Vector2d(3, 4), 1}}};
  AssignmentSample s{0, {{"a", "x"}, {"b", "x"}}};
  const auto la = realise(s, t);
  CHECK(la.bus_power_w.at("x") == Eigen::Vector2d(4, 6));
}

TEST_CASE("percentile and audit") {
  CHECK(percentile({1, 2, 3, 4, 5}, 0.5) == 3.0);
  CHECK(percentile({1, 2}, 0.25) == doctest::Approx(1.25));
  CHECK(percentile({7}, 0.9) == 7.0);
  CHECK_THROWS_AS(percentile({}, 0.5), Error);

  FeatureMatrix fm{{"a", "b", "c", "d", "e", "f"}, Eigen::MatrixXd(6, 1), {"x"}};
  fm.values << 0, 0.1, 0.2, 10, 10.1, 10.2;
  GroupExchange tight;
  tight.groups = {{"g1", {"a", "b", "c"}, {"1", "2", "3"}}, {"g2", {"d", "e", "f"}, {"4", "5", "6"}}};
  const auto ok = anonymity_audit(tight, fm);
  for (const auto& g : ok.groups) CHECK_FALSE(g.flagged);
  GroupExchange loose;
  loose.groups = {{"g1", {"a", "b", "d"}, {"1", "2", "4"}}, {"g2", {"c", "e", "f"}, {"3", "5", "6"}}};
  const auto bad = anonymity_audit(loose, fm, 0.5);
  CHECK(std::any_of(bad.groups.begin(), bad.groups.end(), [](const GroupAudit& g) { return g.flagged; }));
}

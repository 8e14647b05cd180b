#include <filesystem>
#include <string>

#include "doctest.h"
#include "helpers.hpp"
#include "smanon/bench.hpp"
#include "smanon/model.hpp"

using namespace smanon;

namespace {

std::string two_bus_json() {
  return R"({"name":"t","buses":[{"id":"a","v_base_v":400},{"id":"b","v_base_v":400}],
             "lines":[{"from":"a","to":"b","r_ohm":0.01,"x_ohm":0.002,"ampacity_a":100}],
             "transformer":{"bus":"a"},"known_loads":[],"unknown_loads":[{"bus":"b","energy_kwh":10,"category":"House"}]})";
}

}  // namespace

TEST_CASE("time grid validation") {
  CHECK_THROWS_AS(TimeGrid(std::vector<Instant>{}), Error);
  const auto t0 = parse_iso8601("2021-01-01T00:00:00Z");
  CHECK_THROWS_WITH_AS(TimeGrid({t0, t0 + std::chrono::seconds(900), t0 + std::chrono::seconds(1900)}),
                       doctest::Contains("non-uniform"), Error);
  CHECK_THROWS_AS(TimeGrid({t0, t0}), Error);
  const auto g = TimeGrid::uniform(t0, 900, 4);
  CHECK(g.step_seconds() == 900.0);
  CHECK(format_iso8601(g[3]) == "2021-01-01T00:45:00Z");
  CHECK(g.weekday(0) == 4);  // a Friday
  CHECK(parse_iso8601("2021-01-01 00:15") == g[1]);
}

TEST_CASE("profile CSV parsing") {
  const std::string text =
      "timestamp,m1,m2\n2021-01-01T00:00:00Z,100,100\n2021-01-01T00:15:00Z,100,100\n"
      "2021-01-01T00:30:00Z,100,100\n2021-01-01T00:45:00Z,100,100\n";
  const auto t = parse_profiles_csv(text);
  REQUIRE(t.profiles.size() == 2);
  CHECK(t.grid.size() == 4);
  CHECK(t.profiles[1].power_w.isApproxToConstant(100.0));

  SUBCASE("single gap is interpolated under infer, rejected under strict") {
    const std::string gap = "timestamp,m\n2021-01-01T00:00:00Z,10\n2021-01-01T00:15:00Z,\n2021-01-01T00:30:00Z,30\n";
    CHECK_THROWS_AS(parse_profiles_csv(gap, GridPolicy::Strict), Error);
    CHECK(parse_profiles_csv(gap, GridPolicy::Infer).profiles[0].power_w[1] == doctest::Approx(20.0));
  }
  SUBCASE("gap longer than four steps") {
    std::string s = "timestamp,m\n2021-01-01T00:00:00Z,1\n";
    for (int i = 1; i <= 5; ++i) s += format_iso8601(parse_iso8601("2021-01-01T00:00:00Z") + std::chrono::minutes(15 * i)) + ",\n";
    s += "2021-01-01T01:30:00Z,1\n";
    CHECK_THROWS_WITH_AS(parse_profiles_csv(s, GridPolicy::Infer), doctest::Contains("gap of 5"), Error);
  }
  SUBCASE("errors") {
    CHECK_THROWS_WITH_AS(parse_profiles_csv("timestamp,a,a\n2021-01-01T00:00:00Z,1,2\n"), doctest::Contains("duplicate"), Error);
    CHECK_THROWS_WITH_AS(parse_profiles_csv("timestamp,a\n2021-01-01T00:00:00Z,-1\n"), doctest::Contains("negative"), Error);
    CHECK_THROWS_WITH_AS(parse_profiles_csv("timestamp,a\n2021-01-01T00:00:00Z,1\n2021-01-01T00:15:00Z,1\n2021-01-01T00:45:00Z,1\n"),
                         doctest::Contains("non-uniform"), Error);
  }
}

TEST_CASE("a year of quarter-hours gives a 35040-step grid") {
  const auto g = testing::grid_of(35040);
  LoadProfile p{"m", LoadCategory::House, Eigen::VectorXd::Constant(35040, 250.0), 1};
  const auto path = std::filesystem::temp_directory_path() / "smanon_year.csv";
  write_profiles_csv(path, g, std::span<const LoadProfile>(&p, 1));
  const auto t = read_profiles_csv(path);
  std::filesystem::remove(path);
  CHECK(t.grid.size() == 35040);
  CHECK(t.grid.step_seconds() == 900.0);
}

TEST_CASE("profile CSV round trip is bit exact") {
  Rng rng(5);
  const auto g = testing::grid_of(50);
  std::vector<LoadProfile> ps(3);
  for (int i = 0; i < 3; ++i) {
    ps[static_cast<std::size_t>(i)].meter_id = "m" + std::to_string(i);
    ps[static_cast<std::size_t>(i)].power_w.resize(50);
    for (int t = 0; t < 50; ++t) ps[static_cast<std::size_t>(i)].power_w[t] = rng.uniform() * 1e3 / 3.0;
  }
  const auto path = std::filesystem::temp_directory_path() / "smanon_rt.csv";
  write_profiles_csv(path, g, ps);
  const auto back = read_profiles_csv(path);
  std::filesystem::remove(path);
  CHECK(back.grid == g);
  for (int i = 0; i < 3; ++i) CHECK((back.profiles[static_cast<std::size_t>(i)].power_w.array() == ps[static_cast<std::size_t>(i)].power_w.array()).all());
}

TEST_CASE("network JSON") {
  const auto net = parse_network_json(two_bus_json());
  CHECK(net.buses.size() == 2);
  CHECK(net.lines.size() == 1);
  CHECK(net.unknown_loads[0].energy_j == doctest::Approx(3.6e7));

  SUBCASE("loop is rejected") {
    auto doc = R"({"buses":[{"id":"a"},{"id":"b"},{"id":"c"}],
      "lines":[{"from":"a","to":"b"},{"from":"b","to":"c"},{"from":"c","to":"a"}],"transformer":"a"})";
    CHECK_THROWS_WITH_AS(parse_network_json(doc), doctest::Contains("network not radial"), Error);
  }
  SUBCASE("disconnected bus") {
    auto doc = R"({"buses":[{"id":"a"},{"id":"b"},{"id":"c"}],"lines":[{"from":"a","to":"b"}],"transformer":"a"})";
    CHECK_THROWS_WITH_AS(parse_network_json(doc), doctest::Contains("disconnected"), Error);
  }
  SUBCASE("unknown bus") {
    auto doc = R"({"buses":[{"id":"a"},{"id":"b"}],"lines":[{"from":"a","to":"x"}],"transformer":"a"})";
    CHECK_THROWS_WITH_AS(parse_network_json(doc), doctest::Contains("unknown bus"), Error);
  }
  SUBCASE("two transformers") {
    auto doc = R"({"buses":[{"id":"a"},{"id":"b"}],"lines":[{"from":"a","to":"b"}],"transformer":["a","b"]})";
    CHECK_THROWS_WITH_AS(parse_network_json(doc), doctest::Contains("more than one transformer"), Error);
  }
  SUBCASE("round trip is bit exact") {
    Rng rng(3);
    auto n = testing::random_radial(12, rng);
    n.known_loads["b3"] = "m3";
    n.unknown_loads.push_back({"b4", 1.0 / 3.0 * 1e9, LoadCategory::NonResidential});
    const auto back = parse_network_json(network_to_json(n));
    REQUIRE(back.lines.size() == n.lines.size());
    for (std::size_t i = 0; i < n.lines.size(); ++i) {
      CHECK(back.lines[i].r_ohm == n.lines[i].r_ohm);
      CHECK(back.lines[i].x_ohm == n.lines[i].x_ohm);
    }
    CHECK(back.unknown_loads[0].energy_j == n.unknown_loads[0].energy_j);
    CHECK(back.known_loads == n.known_loads);
    CHECK(back.lines.size() + 1 == back.buses.size());
  }
}

TEST_CASE("multi-customer aggregation split") {
  std::vector<LoadProfile> ps{{"a", LoadCategory::Apartment, Eigen::VectorXd::Ones(2), 5},
                              {"b", LoadCategory::House, Eigen::VectorXd::Ones(2), 1},
                              {"c", LoadCategory::Apartment, Eigen::VectorXd::Ones(2), 3}};
  const auto s = aggregate_multicustomer(ps, 3);
  CHECK(s.fixed.size() == 2);
  REQUIRE(s.anonymisable.size() == 1);
  CHECK(s.anonymisable[0].meter_id == "b");
  CHECK_THROWS_AS(aggregate_multicustomer(ps, 0), Error);
}

TEST_CASE("six-network bundle: 257 meters, 39 fixed") {
  auto spec = SynthSpec::reference();
  spec.days = 1;
  const auto ref = synth_reference(spec);
  std::size_t total = 0, fixed = 0;
  const auto dir = std::filesystem::temp_directory_path() / "smanon_bundle";
  std::filesystem::create_directories(dir);
  for (std::size_t n = 0; n < ref.networks.size(); ++n) {
    write_network_json(dir / "net.json", ref.networks[n]);
    const auto back = read_network_json(dir / "net.json");
    total += back.known_loads.size() + back.unknown_loads.size();
    fixed += aggregate_multicustomer(ref.meters[n].profiles, 3).fixed.size();
  }
  std::filesystem::remove_all(dir);
  CHECK(total == 257);
  CHECK(fixed == 39);
}

#include "smanon/anonymize.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"
#include "smanon/rng.hpp"

namespace smanon {

using nlohmann::json;

void GroupExchange::validate() const {
  std::set<std::string> meters, buses;
  for (const auto& g : groups) {
    if (g.meters.size() != g.buses.size())
      throw Error("group '" + g.id + "' lists " + std::to_string(g.meters.size()) + " meters but " +
                  std::to_string(g.buses.size()) + " buses");
    if (g.meters.empty()) throw Error("group '" + g.id + "' is empty");
    for (const auto& m : g.meters)
      if (!meters.insert(m).second) throw Error("meter '" + m + "' appears in more than one group");
    for (const auto& b : g.buses)
      if (!buses.insert(b).second) throw Error("bus '" + b + "' appears in more than one group");
  }
  for (const auto& [m, b] : fixed) {
    if (meters.count(m)) throw Error("meter '" + m + "' is both fixed and grouped");
    if (buses.count(b)) throw Error("bus '" + b + "' is both fixed and grouped");
  }
}

std::string exchange_to_json(const GroupExchange& x) {
  json doc;
  doc["groups"] = json::array();
  for (const auto& g : x.groups) doc["groups"].push_back({{"id", g.id}, {"meters", g.meters}, {"buses", g.buses}});
  doc["fixed"] = json::object();
  for (const auto& [m, b] : x.fixed) doc["fixed"][m] = b;
  return doc.dump(2) + "\n";
}

GroupExchange parse_exchange_json(std::string_view text) {
  GroupExchange x;
  try {
    const auto doc = json::parse(text);
    for (const auto& g : doc.at("groups"))
      x.groups.push_back({g.at("id").get<std::string>(), g.at("meters").get<std::vector<std::string>>(),
                          g.at("buses").get<std::vector<std::string>>()});
    if (doc.contains("fixed")) x.fixed = doc.at("fixed").get<std::map<std::string, std::string>>();
  } catch (const json::exception& e) {
    throw Error(std::string("malformed exchange file: ") + e.what());
  }
  x.validate();
  return x;
}

GroupExchange read_exchange_json(const std::filesystem::path& path) {
  return parse_exchange_json(read_text_file(path));
}

void write_exchange_json(const std::filesystem::path& path, const GroupExchange& x) {
  write_text_file(path, exchange_to_json(x));
}

GroupExchange build_groups(std::span<const LoadProfile> profiles, const TimeGrid& grid,
                           const std::map<std::string, std::string>& meter_bus,
                           const GroupingOptions& opts, GroupingDetail* detail) {
  if (opts.k < 2) throw Error("group size k must be at least 2");
  const auto split = aggregate_multicustomer(profiles, opts.threshold);
  auto bus_of = [&](const std::string& meter) {
    auto it = meter_bus.find(meter);
    if (it == meter_bus.end()) throw Error("meter '" + meter + "' has no known bus");
    return it->second;
  };

  GroupExchange x;
  for (const auto& p : split.fixed) x.fixed[p.meter_id] = bus_of(p.meter_id);
  const auto& anon = split.anonymisable;
  if (anon.size() < static_cast<std::size_t>(opts.k))
    throw Error("fewer than k anonymisable meters (" + std::to_string(anon.size()) + " < " +
                std::to_string(opts.k) + ")");

  GroupingDetail local;
  GroupingDetail& d = detail ? *detail : local;
  d.features = build_features(anon, grid, opts.scenario);
  if (opts.scenario.kind != Scenario::PCA) d.features = zscore_normalize(d.features, &d.warnings);

  std::vector<std::vector<int>> clusters;
  if (opts.scenario.kind == Scenario::OneGroup) {
    clusters.emplace_back(anon.size());
    for (std::size_t i = 0; i < anon.size(); ++i) clusters[0][i] = static_cast<int>(i);
  } else {
    auto g = distance_matrix(d.features);
    if (opts.scenario.kind == Scenario::Affinity) g = affinity_matrix(g, opts.affinity_cap);
    d.partition = rsgp(g, opts.k, opts.ip_time_limit_s);
    clusters = d.partition->clusters;
  }

  Rng rng(opts.seed);
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    ExchangeGroup grp;
    grp.id = "g" + std::to_string(c + 1);
    for (int i : clusters[c]) {
      grp.meters.push_back(anon[static_cast<std::size_t>(i)].meter_id);
      grp.buses.push_back(bus_of(anon[static_cast<std::size_t>(i)].meter_id));
    }
    std::sort(grp.meters.begin(), grp.meters.end());
    std::sort(grp.buses.begin(), grp.buses.end());
    rng.shuffle(std::span<std::string>(grp.buses));
    x.groups.push_back(std::move(grp));
  }
  x.validate();
  return x;
}

AssignmentSample sample_assignment(const GroupExchange& x, std::uint64_t seed) {
  AssignmentSample s;
  s.seed = seed;
  Rng rng(seed);
  for (const auto& g : x.groups) {
    auto buses = g.buses;
    rng.shuffle(std::span<std::string>(buses));
    for (std::size_t i = 0; i < g.meters.size(); ++i) s.mapping[g.meters[i]] = buses[i];
  }
  for (const auto& [m, b] : x.fixed) s.mapping[m] = b;
  return s;
}

LoadAssignment realise(const AssignmentSample& sample, const ProfileTable& profiles) {
  LoadAssignment a;
  for (const auto& [meter, bus] : sample.mapping) {
    const auto* p = profiles.find(meter);
    if (!p) throw Error("no profile for meter '" + meter + "'");
    auto [it, inserted] = a.bus_power_w.try_emplace(bus, p->power_w);
    if (!inserted) it->second += p->power_w;
  }
  return a;
}

void monte_carlo_each(const GroupExchange& x, const Network& network, const ProfileTable& profiles,
                      int n_iter, std::uint64_t base_seed, const PowerFlowOptions& opts,
                      const std::function<void(int, const AssignmentSample&, const PowerFlowResult&)>& fn) {
  if (n_iter < 1) throw Error("Monte Carlo needs at least one iteration");
  const RadialSolver solver(network, opts.s_base_va);
  for (int i = 0; i < n_iter; ++i) {
    const auto sample = sample_assignment(x, base_seed + static_cast<std::uint64_t>(i));
    const auto [p, tan_phi] = load_matrix(network, realise(sample, profiles));
    fn(i, sample, solver.solve_series(p, tan_phi, opts));
  }
}

std::vector<MonteCarloRun> monte_carlo(const GroupExchange& x, const Network& network,
                                       const ProfileTable& profiles, int n_iter,
                                       std::uint64_t base_seed, const PowerFlowOptions& opts) {
  std::vector<MonteCarloRun> runs;
  monte_carlo_each(x, network, profiles, n_iter, base_seed, opts,
                   [&](int, const AssignmentSample& s, const PowerFlowResult& f) { runs.push_back({s, f}); });
  return runs;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw Error("percentile of an empty set");
  if (!(q >= 0.0 && q <= 1.0)) throw Error("percentile must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

AuditReport anonymity_audit(const GroupExchange& x, const FeatureMatrix& features, double q) {
  std::map<std::string, Eigen::Index> row;
  for (std::size_t i = 0; i < features.meter_ids.size(); ++i)
    row[features.meter_ids[i]] = static_cast<Eigen::Index>(i);
  std::vector<Eigen::Index> grouped;
  for (const auto& g : x.groups)
    for (const auto& m : g.meters) {
      auto it = row.find(m);
      if (it == row.end()) throw Error("no features for grouped meter '" + m + "'");
      grouped.push_back(it->second);
    }

  auto dist = [&](Eigen::Index a, Eigen::Index b) { return (features.values.row(a) - features.values.row(b)).norm(); };
  std::vector<double> all;
  for (std::size_t a = 0; a < grouped.size(); ++a)
    for (std::size_t b = a + 1; b < grouped.size(); ++b) all.push_back(dist(grouped[a], grouped[b]));

  AuditReport rep;
  rep.percentile = q;
  rep.threshold = all.empty() ? 0.0 : percentile(all, q);
  for (const auto& g : x.groups) {
    GroupAudit ga;
    ga.id = g.id;
    ga.size = static_cast<int>(g.meters.size());
    double sum = 0.0;
    int pairs = 0;
    for (std::size_t a = 0; a < g.meters.size(); ++a)
      for (std::size_t b = a + 1; b < g.meters.size(); ++b) {
        const double dd = dist(row.at(g.meters[a]), row.at(g.meters[b]));
        ga.max_distance = std::max(ga.max_distance, dd);
        sum += dd;
        ++pairs;
      }
    ga.mean_distance = pairs ? sum / pairs : 0.0;
    ga.flagged = ga.max_distance > rep.threshold;
    rep.groups.push_back(ga);
  }
  return rep;
}

}  // namespace smanon

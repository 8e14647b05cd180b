#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>

#include "smanon/bench.hpp"
#include "smanon/rng.hpp"

namespace smanon {

namespace {

constexpr double kSecondsPerYear = 365.0 * 86400.0;

double bump(double h, double centre, double width) {
  // Circular distance on the 24 h clock.
  double d = std::fmod(std::abs(h - centre), 24.0);
  d = std::min(d, 24.0 - d);
  return std::exp(-0.5 * (d / width) * (d / width));
}

double smooth_step(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct Shape {
  bool business = false;
  double base, morning_at, morning_amp, evening_at, evening_amp, noon_amp;
  double open_at, close_at, weekend_level, seasonal;
  double spike_rate, spike_amp;
};

Shape random_shape(LoadCategory cat, Rng& rng) {
  auto u = [&](double a, double b) { return a + (b - a) * rng.uniform(); };
  Shape s{};
  if (cat == LoadCategory::NonResidential) {
    s.business = true;
    s.base = u(0.15, 0.5);
    s.open_at = u(6.5, 9.0);
    s.close_at = u(16.5, 20.0);
    s.weekend_level = u(0.2, 0.9);
    s.seasonal = u(0.0, 0.2);
    s.spike_rate = u(0.0, 0.01);
    s.spike_amp = u(0.5, 1.5);
  } else {
    s.base = u(0.2, 0.6);
    s.morning_at = u(6.0, 8.5);
    s.morning_amp = u(0.3, 1.2);
    s.evening_at = u(17.5, 20.5);
    s.evening_amp = u(0.8, 2.0);
    s.noon_amp = u(0.0, 0.6);
    s.weekend_level = u(0.9, 1.3);
    s.seasonal = u(0.1, 0.35);
    s.spike_rate = u(0.005, 0.04);
    s.spike_amp = u(1.0, 5.0);
  }
  return s;
}

double shape_value(const Shape& s, double hour, bool weekend, int doy) {
  const double season = 1.0 + s.seasonal * std::cos(2.0 * std::numbers::pi * (doy - 15) / 365.0);
  double v;
  if (s.business) {
    const double open = smooth_step(2.0 * (hour - s.open_at)) * smooth_step(2.0 * (s.close_at - hour));
    v = s.base + (weekend ? s.weekend_level : 1.0) * open;
  } else {
    const double shift = weekend ? 1.5 : 0.0;
    v = s.base + s.morning_amp * bump(hour, s.morning_at + shift, 1.0) +
        s.evening_amp * bump(hour, s.evening_at, 1.8) +
        (weekend ? 1.5 : 1.0) * s.noon_amp * bump(hour, 12.5, 1.5);
    if (weekend) v *= s.weekend_level;
  }
  return v * season;
}

// Profile with the given energy over the grid.
Eigen::VectorXd synth_profile(LoadCategory cat, double energy_j, const TimeGrid& grid, double noise_sigma, Rng& rng) {
  const Shape s = random_shape(cat, rng);
  const auto T = static_cast<Eigen::Index>(grid.size());
  Eigen::VectorXd p(T);
  for (Eigen::Index t = 0; t < T; ++t) {
    const auto i = static_cast<std::size_t>(t);
    const double hour = grid.second_of_day(i) / 3600.0;
    const bool weekend = grid.weekday(i) >= 5;
    double v = shape_value(s, hour, weekend, grid.day_of_year(i));
    v *= std::exp(noise_sigma * rng.normal() - 0.5 * noise_sigma * noise_sigma);
    if (rng.uniform() < s.spike_rate) v += s.spike_amp * (0.5 + rng.uniform());
    p[t] = v;
  }
  const double e = p.sum() * grid.step_seconds();
  return p * (energy_j / e);
}

std::string numbered(const std::string& prefix, int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d", i);
  return prefix + buf;
}

char category_letter(LoadCategory c) {
  switch (c) {
    case LoadCategory::Apartment: return 'A';
    case LoadCategory::House: return 'H';
    case LoadCategory::NonResidential: return 'N';
  }
  return '?';
}

}  // namespace

double synth_energy_quantile(int i, int n, double median, double shape) {
  const double q = (i + 0.5) / n;
  return median * std::pow(q / (1.0 - q), 1.0 / shape);
}

SynthSpec SynthSpec::reference() {
  using C = LoadCategory;
  SynthSpec s;
  auto net = [](std::string name, int a, double ma, int h, double mh, int nr, double mn, int multi) {
    SynthNetworkSpec n;
    n.name = std::move(name);
    n.counts = {{C::Apartment, a}, {C::House, h}, {C::NonResidential, nr}};
    n.median_kwh = {{C::Apartment, ma * 1e3}, {C::House, mh * 1e3}, {C::NonResidential, mn * 1e3}};
    n.multi_customer_apartments = multi;
    return n;
  };
  s.networks = {net("3716", 13, 11.2, 15, 5.4, 22, 11.6, 10), net("4178", 9, 20.2, 51, 4.5, 6, 10.0, 7),
                net("4513", 18, 4.1, 3, 3.7, 9, 11.0, 14),  net("4756", 3, 4.3, 28, 5.4, 18, 9.9, 3),
                net("4769", 4, 4.2, 26, 4.9, 14, 12.5, 3),  net("7575", 2, 65.9, 11, 4.9, 5, 5.1, 2)};
  s.database = {{C::Apartment, 38, 3.3e3}, {C::House, 46, 4.4e3}, {C::NonResidential, 1, 22.4e3},
                {C::Apartment, 44, 2.1e3}, {C::House, 48, 4.2e3}, {C::NonResidential, 3, 407e3}};
  return s;
}

void SynthSpec::validate() const {
  if (days < 1 || step_s < 1 || 86400 % step_s != 0) throw Error("synthetic horizon must be whole days of whole steps");
  if (!(energy_shape > 0.0) || !(noise_sigma >= 0.0)) throw Error("invalid synthetic distribution parameters");
  if (loads_per_junction < 1) throw Error("loads per junction must be positive");
  for (const auto& n : networks) {
    int total = 0;
    for (const auto& [c, k] : n.counts) {
      if (k < 0) throw Error("negative load count in network " + n.name);
      total += k;
      if (k > 0 && !(n.median_kwh.count(c) && n.median_kwh.at(c) > 0.0))
        throw Error("network " + n.name + " needs a positive median for every populated category");
    }
    if (total == 0) throw Error("network " + n.name + " has no loads");
    const auto a = n.counts.count(LoadCategory::Apartment) ? n.counts.at(LoadCategory::Apartment) : 0;
    if (n.multi_customer_apartments < 0 || n.multi_customer_apartments > a)
      throw Error("network " + n.name + " has more multi-customer meters than apartments");
  }
  for (const auto& g : database)
    if (g.count < 0 || (g.count > 0 && !(g.median_kwh > 0.0))) throw Error("invalid database group");
}

SynthReference synth_reference(const SynthSpec& spec) {
  spec.validate();
  SynthReference out;
  const auto n_steps = static_cast<std::size_t>(spec.days) * 86400 / static_cast<std::size_t>(spec.step_s);
  out.grid = TimeGrid::uniform(parse_iso8601(spec.start), spec.step_s, n_steps);
  const double horizon = static_cast<double>(n_steps) * spec.step_s / kSecondsPerYear;
  Rng rng(spec.seed);

  for (const auto& ns : spec.networks) {
    Network net;
    net.name = ns.name;
    net.transformer_bus = "tr";
    net.buses.push_back({"tr", 400.0});
    ProfileTable table;
    table.grid = out.grid;
    std::map<std::string, std::string> meter_bus;

    // Loads with their energies; the largest apartments aggregate several customers.
    struct Pending {
      LoadProfile profile;
      double energy_j;
    };
    std::vector<Pending> loads;
    for (const auto cat : kAllCategories) {
      const int n = ns.counts.count(cat) ? ns.counts.at(cat) : 0;
      if (n == 0) continue;
      std::vector<double> e(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) e[static_cast<std::size_t>(i)] = synth_energy_quantile(i, n, ns.median_kwh.at(cat), spec.energy_shape);
      std::vector<int> order(static_cast<std::size_t>(n));
      std::iota(order.begin(), order.end(), 0);
      if (cat != LoadCategory::Apartment) rng.shuffle(std::span<int>(order));
      else std::reverse(order.begin(), order.end());
      for (int i = 0; i < n; ++i) {
        Pending p;
        p.profile.meter_id = ns.name + "-" + numbered(std::string(1, category_letter(cat)), i + 1);
        p.profile.category = cat;
        p.profile.customer_count = 1;
        if (cat == LoadCategory::Apartment && i < ns.multi_customer_apartments)
          p.profile.customer_count = 3 + static_cast<int>(rng.below(6));
        p.energy_j = e[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] * kJoulePerKwh * horizon;
        loads.push_back(std::move(p));
      }
    }
    rng.shuffle(std::span<Pending>(loads));

    // Random recursive tree of junctions under the transformer, loads on service cables.
    const int n_loads = static_cast<int>(loads.size());
    const int n_junctions = (n_loads + spec.loads_per_junction - 1) / spec.loads_per_junction;
    auto length = [&](const double (&range)[2]) { return range[0] + (range[1] - range[0]) * rng.uniform(); };
    for (int j = 1; j <= n_junctions; ++j) {
      const std::string id = numbered("J", j);
      const int parent = static_cast<int>(rng.below(static_cast<std::uint64_t>(j)));
      const double len_km = length(spec.trunk_len_m) / 1e3;
      net.buses.push_back({id, 400.0});
      net.lines.push_back({parent == 0 ? "tr" : numbered("J", parent), id, spec.trunk_r_ohm_km * len_km,
                           spec.trunk_x_ohm_km * len_km, spec.trunk_ampacity_a});
    }
    for (int i = 0; i < n_loads; ++i) {
      auto& p = loads[static_cast<std::size_t>(i)];
      const std::string bus = numbered("L", i + 1);
      const double len_km = length(spec.service_len_m) / 1e3;
      net.buses.push_back({bus, 400.0});
      net.lines.push_back({numbered("J", i % n_junctions + 1), bus, spec.service_r_ohm_km * len_km,
                           spec.service_x_ohm_km * len_km, spec.service_ampacity_a});
      p.profile.power_w = synth_profile(p.profile.category, p.energy_j, out.grid, spec.noise_sigma, rng);
      meter_bus[p.profile.meter_id] = bus;
      if (p.profile.customer_count >= 3)
        net.known_loads[bus] = p.profile.meter_id;
      else
        net.unknown_loads.push_back({bus, p.profile.power_w.sum() * out.grid.step_seconds(), p.profile.category});
      table.profiles.push_back(std::move(p.profile));
    }
    std::sort(table.profiles.begin(), table.profiles.end(),
              [](const LoadProfile& a, const LoadProfile& b) { return a.meter_id < b.meter_id; });
    net.validate();
    out.networks.push_back(std::move(net));
    out.meters.push_back(std::move(table));
    out.meter_bus.push_back(std::move(meter_bus));
  }

  std::map<LoadCategory, int> serial;
  for (const auto& g : spec.database)
    for (int i = 0; i < g.count; ++i) {
      LoadProfile p;
      p.category = g.category;
      p.meter_id = "db-" + numbered(std::string(1, category_letter(g.category)), ++serial[g.category]);
      const double e = synth_energy_quantile(i, g.count, g.median_kwh, spec.energy_shape) * kJoulePerKwh * horizon;
      p.power_w = synth_profile(g.category, e, out.grid, spec.noise_sigma, rng);
      out.database.entries.push_back(std::move(p));
    }
  return out;
}

}  // namespace smanon

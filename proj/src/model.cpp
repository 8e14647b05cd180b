#include "smanon/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

namespace smanon {

using nlohmann::json;

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  for (auto l : split(text, '\n')) {
    l = trim(l);
    if (!l.empty()) out.push_back(l);
  }
  return out;
}

double parse_double(std::string_view s, std::string_view what) {
  s = trim(s);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v))
    throw Error("bad numeric value '" + std::string(s) + "' in " + std::string(what));
  return v;
}

constexpr std::size_t kMaxGap = 4;

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

std::string_view to_string(LoadCategory c) {
  switch (c) {
    case LoadCategory::Apartment: return "Apartment";
    case LoadCategory::House: return "House";
    case LoadCategory::NonResidential: return "NonResidential";
  }
  return "?";
}

LoadCategory parse_category(std::string_view text) {
  std::string s(trim(text));
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "apartment") return LoadCategory::Apartment;
  if (s == "house") return LoadCategory::House;
  if (s == "nonresidential" || s == "non_residential" || s == "notres" || s == "not res.")
    return LoadCategory::NonResidential;
  throw Error("unknown load category '" + std::string(text) + "'");
}

const LoadProfile* ProfileTable::find(std::string_view meter_id) const {
  for (const auto& p : profiles)
    if (p.meter_id == meter_id) return &p;
  return nullptr;
}

ProfileTable parse_profiles_csv(std::string_view text, GridPolicy policy) {
  auto rows = lines_of(text);
  if (rows.empty()) throw Error("empty profile file");
  auto header = split(rows.front(), ',');
  if (header.size() < 2 || trim(header[0]) != "timestamp")
    throw Error("profile header must start with 'timestamp'");

  const std::size_t n_meters = header.size() - 1;
  const std::size_t n_steps = rows.size() - 1;
  if (n_steps == 0) throw Error("profile file has no data rows");

  std::vector<std::string> ids;
  std::set<std::string> seen;
  for (std::size_t c = 1; c < header.size(); ++c) {
    std::string id(trim(header[c]));
    if (id.empty()) throw Error("empty meter id in header");
    if (!seen.insert(id).second) throw Error("duplicate meter_id '" + id + "'");
    ids.push_back(std::move(id));
  }

  std::vector<Instant> stamps(n_steps);
  Eigen::MatrixXd values(n_steps, n_meters);
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> missing =
      Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n_steps, n_meters, false);

  for (std::size_t r = 0; r < n_steps; ++r) {
    auto cells = split(rows[r + 1], ',');
    if (cells.size() != header.size())
      throw Error("row " + std::to_string(r + 2) + " has " + std::to_string(cells.size()) +
                  " cells, expected " + std::to_string(header.size()));
    stamps[r] = parse_iso8601(cells[0]);
    for (std::size_t c = 0; c < n_meters; ++c) {
      auto cell = trim(cells[c + 1]);
      if (cell.empty() || cell == "NA" || cell == "nan") {
        if (policy == GridPolicy::Strict)
          throw Error("missing value for meter '" + ids[c] + "' at row " + std::to_string(r + 2));
        missing(r, c) = true;
        values(r, c) = 0.0;
        continue;
      }
      double v = parse_double(cell, "meter '" + ids[c] + "'");
      if (v < 0.0)
        throw Error("negative power for meter '" + ids[c] + "' at row " + std::to_string(r + 2));
      values(r, c) = v;
    }
  }

  TimeGrid grid(std::move(stamps));

  if (policy == GridPolicy::Infer) {
    for (std::size_t c = 0; c < n_meters; ++c) {
      std::size_t r = 0;
      while (r < n_steps) {
        if (!missing(r, c)) {
          ++r;
          continue;
        }
        std::size_t end = r;
        while (end < n_steps && missing(end, c)) ++end;
        const std::size_t gap = end - r;
        if (gap > kMaxGap)
          throw Error("gap of " + std::to_string(gap) + " steps for meter '" + ids[c] +
                      "' exceeds the interpolation limit");
        if (r == 0 || end == n_steps)
          throw Error("gap at the edge of the series for meter '" + ids[c] +
                      "' cannot be interpolated");
        const double lo = values(r - 1, c);
        const double hi = values(end, c);
        for (std::size_t i = r; i < end; ++i) {
          const double w = static_cast<double>(i - r + 1) / static_cast<double>(gap + 1);
          values(i, c) = lo + w * (hi - lo);
        }
        r = end;
      }
    }
  }

  ProfileTable table{std::move(grid), {}};
  table.profiles.reserve(n_meters);
  for (std::size_t c = 0; c < n_meters; ++c) {
    LoadProfile p;
    p.meter_id = ids[c];
    p.power_w = values.col(static_cast<Eigen::Index>(c));
    table.profiles.push_back(std::move(p));
  }
  return table;
}

ProfileTable read_profiles_csv(const std::filesystem::path& path, GridPolicy policy) {
  return parse_profiles_csv(read_text_file(path), policy);
}

void write_profiles_csv(const std::filesystem::path& path, const TimeGrid& grid,
                        std::span<const LoadProfile> profiles) {
  std::string out = "timestamp";
  for (const auto& p : profiles) {
    if (static_cast<std::size_t>(p.power_w.size()) != grid.size())
      throw Error("profile '" + p.meter_id + "' is not aligned to the time grid");
    out += ',';
    out += p.meter_id;
  }
  out += '\n';
  for (std::size_t t = 0; t < grid.size(); ++t) {
    out += format_iso8601(grid[t]);
    for (const auto& p : profiles) {
      out += ',';
      out += format_double(p.power_w[static_cast<Eigen::Index>(t)]);
    }
    out += '\n';
  }
  write_text_file(path, out);
}

std::map<std::string, MeterInfo> read_meter_metadata_csv(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  auto rows = lines_of(text);
  if (rows.empty()) throw Error("empty metadata file " + path.string());
  auto header = split(rows.front(), ',');
  if (header.size() < 3 || trim(header[0]) != "meter_id" || trim(header[1]) != "category" ||
      trim(header[2]) != "customers")
    throw Error("metadata header must be 'meter_id,category,customers'");
  std::map<std::string, MeterInfo> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    auto cells = split(rows[r], ',');
    if (cells.size() < 3) throw Error("short metadata row " + std::to_string(r + 1));
    MeterInfo info;
    info.category = parse_category(cells[1]);
    info.customers = static_cast<int>(parse_double(cells[2], "customers"));
    if (info.customers < 1) throw Error("customer count must be positive");
    if (!out.emplace(std::string(trim(cells[0])), info).second)
      throw Error("duplicate meter_id '" + std::string(trim(cells[0])) + "' in metadata");
  }
  return out;
}

void write_meter_metadata_csv(const std::filesystem::path& path,
                              std::span<const LoadProfile> profiles) {
  std::string out = "meter_id,category,customers\n";
  for (const auto& p : profiles) {
    out += p.meter_id;
    out += ',';
    out += to_string(p.category);
    out += ',';
    out += std::to_string(p.customer_count);
    out += '\n';
  }
  write_text_file(path, out);
}

void apply_metadata(std::vector<LoadProfile>& profiles,
                    const std::map<std::string, MeterInfo>& meta) {
  for (auto& p : profiles) {
    auto it = meta.find(p.meter_id);
    if (it == meta.end()) throw Error("no metadata for meter '" + p.meter_id + "'");
    p.category = it->second.category;
    p.customer_count = it->second.customers;
  }
}

std::optional<std::size_t> Network::bus_index(std::string_view id) const {
  for (std::size_t i = 0; i < buses.size(); ++i)
    if (buses[i].id == id) return i;
  return std::nullopt;
}

void Network::validate() const {
  if (buses.empty()) throw Error("network has no buses");
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (!(buses[i].v_base_v > 0.0)) throw Error("bus '" + buses[i].id + "' has non-positive V_base");
    if (!index.emplace(buses[i].id, i).second) throw Error("duplicate bus '" + buses[i].id + "'");
  }
  auto lookup = [&](const std::string& id, const char* what) {
    auto it = index.find(id);
    if (it == index.end()) throw Error(std::string(what) + " references unknown bus '" + id + "'");
    return it->second;
  };
  const std::size_t root = lookup(transformer_bus, "transformer");

  // Union-find: any line joining two already-connected buses closes a loop.
  std::vector<std::size_t> parent(buses.size());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& l : lines) {
    if (l.r_ohm < 0.0 || l.x_ohm < 0.0)
      throw Error("line " + l.from_bus + "-" + l.to_bus + " has negative impedance");
    auto a = find(lookup(l.from_bus, "line")), b = find(lookup(l.to_bus, "line"));
    if (a == b) throw Error("network not radial: cycle through line " + l.from_bus + "-" + l.to_bus);
    parent[a] = b;
  }
  for (std::size_t i = 0; i < buses.size(); ++i)
    if (find(i) != find(root)) throw Error("disconnected bus '" + buses[i].id + "'");

  std::set<std::string> load_buses;
  for (const auto& [bus, meter] : known_loads) {
    lookup(bus, "known load");
    if (bus == transformer_bus) throw Error("transformer bus cannot carry a known load");
    load_buses.insert(bus);
  }
  for (const auto& u : unknown_loads) {
    lookup(u.bus, "unknown load");
    if (u.bus == transformer_bus) throw Error("transformer bus cannot carry an unknown load");
    if (!load_buses.insert(u.bus).second)
      throw Error("bus '" + u.bus + "' listed as both known and unknown load (or twice)");
    if (!(u.energy_j >= 0.0) || !std::isfinite(u.energy_j))
      throw Error("unknown load at '" + u.bus + "' has invalid energy");
  }
}

Network parse_network_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("invalid network JSON: ") + e.what());
  }
  try {
    for (const char* key : {"buses", "lines", "transformer"})
      if (!doc.contains(key)) throw Error(std::string("network JSON lacks '") + key + "'");
    Network net;
    net.name = doc.value("name", "");
    for (const auto& b : doc.at("buses"))
      net.buses.push_back({b.at("id").get<std::string>(), b.value("v_base_v", 400.0)});
    for (const auto& l : doc.at("lines"))
      net.lines.push_back({l.at("from").get<std::string>(), l.at("to").get<std::string>(),
                           l.value("r_ohm", 0.0), l.value("x_ohm", 0.0), l.value("ampacity_a", 0.0)});
    const auto& tr = doc.at("transformer");
    if (tr.is_array()) {
      if (tr.size() != 1) throw Error("more than one transformer");
      net.transformer_bus =
          tr[0].is_string() ? tr[0].get<std::string>() : tr[0].at("bus").get<std::string>();
    } else if (tr.is_string()) {
      net.transformer_bus = tr.get<std::string>();
    } else {
      net.transformer_bus = tr.at("bus").get<std::string>();
    }
    if (doc.contains("known_loads"))
      for (const auto& k : doc.at("known_loads")) {
        auto bus = k.at("bus").get<std::string>();
        if (!net.known_loads.emplace(bus, k.at("meter").get<std::string>()).second)
          throw Error("bus '" + bus + "' carries two known loads");
      }
    if (doc.contains("unknown_loads"))
      for (const auto& u : doc.at("unknown_loads")) {
        UnknownLoad ul;
        ul.bus = u.at("bus").get<std::string>();
        if (u.contains("energy_j"))
          ul.energy_j = u.at("energy_j").get<double>();
        else
          ul.energy_j = u.at("energy_kwh").get<double>() * kJoulePerKwh;
        ul.category = parse_category(u.at("category").get<std::string>());
        net.unknown_loads.push_back(std::move(ul));
      }
    net.validate();
    return net;
  } catch (const json::exception& e) {
    throw Error(std::string("invalid network JSON: ") + e.what());
  }
}

Network read_network_json(const std::filesystem::path& path) {
  return parse_network_json(read_text_file(path));
}

std::string network_to_json(const Network& net) {
  json doc;
  doc["name"] = net.name;
  doc["buses"] = json::array();
  for (const auto& b : net.buses) doc["buses"].push_back({{"id", b.id}, {"v_base_v", b.v_base_v}});
  doc["lines"] = json::array();
  for (const auto& l : net.lines)
    doc["lines"].push_back({{"from", l.from_bus},
                            {"to", l.to_bus},
                            {"r_ohm", l.r_ohm},
                            {"x_ohm", l.x_ohm},
                            {"ampacity_a", l.ampacity_a}});
  doc["transformer"] = {{"bus", net.transformer_bus}};
  doc["known_loads"] = json::array();
  for (const auto& [bus, meter] : net.known_loads)
    doc["known_loads"].push_back({{"bus", bus}, {"meter", meter}});
  doc["unknown_loads"] = json::array();
  for (const auto& u : net.unknown_loads)
    doc["unknown_loads"].push_back(
        {{"bus", u.bus}, {"energy_j", u.energy_j}, {"category", std::string(to_string(u.category))}});
  return doc.dump(2);
}

void write_network_json(const std::filesystem::path& path, const Network& net) {
  write_text_file(path, network_to_json(net));
}

AggregationSplit aggregate_multicustomer(std::span<const LoadProfile> profiles, int threshold) {
  if (threshold < 1) throw Error("aggregation threshold must be at least 1");
  AggregationSplit split;
  for (const auto& p : profiles)
    (p.customer_count >= threshold ? split.fixed : split.anonymisable).push_back(p);
  return split;
}

}  // namespace smanon

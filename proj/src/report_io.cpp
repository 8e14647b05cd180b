#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "smanon/bench.hpp"

namespace smanon {

using nlohmann::json;

namespace {

json kpi_json(const KpiReport& k) {
  return {{"mse_vm", k.mse_vm},
          {"e_max_trl", k.e_max_trl},
          {"e_max_lnl", k.e_max_lnl},
          {"e_min_vm", k.e_min_vm},
          {"dropped_timesteps", k.dropped_timesteps}};
}

json per_network_json(const std::vector<NetworkKpis>& v) {
  json out = json::object();
  for (const auto& n : v) out[n.network] = kpi_json(n.kpi);
  return out;
}

}  // namespace

std::string study_to_json(const StudyReport& r) {
  json doc;
  doc["n_iter"] = r.n_iter;
  doc["base_seed"] = r.base_seed;
  doc["paper_literal"] = r.paper_literal;
  doc["timesteps"] = r.timesteps;
  doc["networks"] = r.networks;
  doc["reference_v_min_pu"] = r.reference_v_min;
  doc["reference_v_max_pu"] = r.reference_v_max;
  if (r.has_allocation) {
    const auto& a = r.allocation;
    doc["allocation"] = {{"per_network", per_network_json(a.per_network)},
                         {"max_balance_violation", a.max_balance_violation},
                         {"max_energy_violation", a.max_energy_violation},
                         {"max_loadflow_trafo_error", a.max_loadflow_trafo_error},
                         {"all_converged", a.all_converged},
                         {"errors", a.errors}};
  }
  doc["scenarios"] = json::array();
  for (const auto& s : r.scenarios)
    doc["scenarios"].push_back({{"scenario", to_string(s.scenario)},
                                {"n_groups", s.n_groups},
                                {"group_sizes", s.group_sizes},
                                {"flagged_groups", s.flagged_groups},
                                {"mse_vm_mean", s.mse_mean},
                                {"mse_vm_std", s.mse_std},
                                {"kpi_mean", s.kpi_mean},
                                {"kpi_std", s.kpi_std},
                                {"convergence_slope", s.convergence_slope},
                                {"dropped_timesteps", s.dropped_timesteps},
                                {"per_network_mean", per_network_json(s.per_network_mean)},
                                {"mse_vm_per_iteration", s.mse_per_iter}});
  return doc.dump(2) + "\n";
}

std::string convergence_csv(const StudyReport& r) {
  std::ostringstream os;
  os << "scenario,iteration,mse_vm,cumulative_mse_vm,estimate_variance\n";
  for (const auto& s : r.scenarios)
    for (std::size_t i = 0; i < s.mse_per_iter.size(); ++i)
      os << to_string(s.scenario) << ',' << i + 1 << ',' << format_double(s.mse_per_iter[i]) << ','
         << format_double(s.cumulative_mse[i]) << ','
         << (std::isnan(s.estimate_variance[i]) ? std::string() : format_double(s.estimate_variance[i])) << '\n';
  return os.str();
}

std::string kpi_table_csv(const StudyReport& r) {
  std::ostringstream os;
  os << "method,scenario,network,mse_vm,e_max_trl,e_max_lnl,e_min_vm\n";
  auto row = [&](std::string_view method, std::string_view scen, const NetworkKpis& n) {
    os << method << ',' << scen << ',' << n.network << ',' << format_double(n.kpi.mse_vm) << ','
       << format_double(n.kpi.e_max_trl) << ',' << format_double(n.kpi.e_max_lnl) << ','
       << format_double(n.kpi.e_min_vm) << '\n';
  };
  if (r.has_allocation)
    for (const auto& n : r.allocation.per_network) row("allocation", "", n);
  for (const auto& s : r.scenarios)
    for (const auto& n : s.per_network_mean) row("smanet", to_string(s.scenario), n);
  return os.str();
}

std::string mse_histogram_csv(const StudyReport& r, int bins) {
  std::ostringstream os;
  os << "scenario,bin_low,bin_high,count\n";
  for (const auto& s : r.scenarios) {
    if (s.mse_per_iter.empty()) continue;
    const auto [lo_it, hi_it] = std::minmax_element(s.mse_per_iter.begin(), s.mse_per_iter.end());
    const double lo = *lo_it, hi = *hi_it;
    const double width = hi > lo ? (hi - lo) / bins : 1.0;
    std::vector<int> count(static_cast<std::size_t>(bins), 0);
    for (double v : s.mse_per_iter)
      ++count[static_cast<std::size_t>(std::min(bins - 1, static_cast<int>((v - lo) / width)))];
    for (int b = 0; b < bins; ++b)
      os << to_string(s.scenario) << ',' << format_double(lo + b * width) << ','
         << format_double(lo + (b + 1) * width) << ',' << count[static_cast<std::size_t>(b)] << '\n';
  }
  return os.str();
}

std::string convergence_svg(const StudyReport& r) {
  constexpr double W = 640, H = 400, M = 50;
  double y_max = 0.0;
  std::size_t n_max = 1;
  for (const auto& s : r.scenarios) {
    for (double v : s.cumulative_mse) y_max = std::max(y_max, v);
    n_max = std::max(n_max, s.cumulative_mse.size());
  }
  if (y_max <= 0.0) y_max = 1.0;
  static constexpr const char* colours[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<line x1=\"" << M << "\" y1=\"" << H - M << "\" x2=\"" << W - M << "\" y2=\"" << H - M << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << M << "\" y1=\"" << M << "\" x2=\"" << M << "\" y2=\"" << H - M << "\" stroke=\"black\"/>\n"
     << "<text x=\"" << W / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">iteration</text>\n"
     << "<text x=\"12\" y=\"" << M - 15 << "\">cumulative MSE (max " << format_double(y_max) << " pu^2)</text>\n";
  std::size_t c = 0;
  for (const auto& s : r.scenarios) {
    const char* colour = colours[c++ % 5];
    os << "<polyline fill=\"none\" stroke=\"" << colour << "\" points=\"";
    for (std::size_t i = 0; i < s.cumulative_mse.size(); ++i) {
      const double x = M + (W - 2 * M) * (n_max > 1 ? static_cast<double>(i) / static_cast<double>(n_max - 1) : 0.0);
      const double y = H - M - (H - 2 * M) * s.cumulative_mse[i] / y_max;
      os << x << ',' << y << ' ';
    }
    os << "\"/>\n<text x=\"" << W - M - 100 << "\" y=\"" << M + 15 * static_cast<double>(c) << "\" fill=\""
       << colour << "\">" << to_string(s.scenario) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void write_study_outputs(const std::filesystem::path& dir, const StudyReport& r, bool svg) {
  std::filesystem::create_directories(dir);
  write_text_file(dir / "study.json", study_to_json(r));
  write_text_file(dir / "convergence.csv", convergence_csv(r));
  write_text_file(dir / "kpi_table.csv", kpi_table_csv(r));
  write_text_file(dir / "mse_histogram.csv", mse_histogram_csv(r));
  if (svg) write_text_file(dir / "convergence.svg", convergence_svg(r));
}

}  // namespace smanon

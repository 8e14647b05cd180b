#include "smanon/cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#define TOML_ENABLE_FORMATTERS 1
#include "CLI11.hpp"
#include "json.hpp"
#include "toml.hpp"

#include "smanon/allocate.hpp"
#include "smanon/anonymize.hpp"
#include "smanon/bench.hpp"
#include "smanon/features.hpp"
#include "smanon/partition.hpp"
#include "smanon/powerflow.hpp"

namespace smanon {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- config ----------------------------------------------------------------------------------

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  const auto text = read_text_file(path);
  const auto ext = fs::path(path).extension().string();
  try {
    if (ext == ".json") return json::parse(text);
    std::ostringstream os;
    os << toml::json_formatter{toml::parse(text, path)};
    return json::parse(os.str());
  } catch (const toml::parse_error& e) {
    throw Error("invalid config " + path + ": " + std::string(e.description()));
  } catch (const json::exception& e) {
    throw Error("invalid config " + path + ": " + e.what());
  }
}

// Flag value when given on the command line, else the config entry, else the default.
template <typename T>
T pick(const CLI::App& app, const char* flag, const T& flag_value, const json& cfg, const char* key,
       const T& fallback) {
  if (app.count(flag) > 0) return flag_value;
  if (cfg.contains(key)) {
    try {
      return cfg.at(key).get<T>();
    } catch (const json::exception&) {
      throw Error(std::string("config entry '") + key + "' has the wrong type");
    }
  }
  return fallback;
}

// ---- small file helpers ----------------------------------------------------------------------

std::map<std::string, std::string> read_locations_csv(const fs::path& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  std::map<std::string, std::string> out;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line.rfind("meter_id", 0) == 0) continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error("malformed location row '" + line + "'");
    out[line.substr(0, comma)] = line.substr(comma + 1);
  }
  return out;
}

std::string locations_csv(const std::map<std::string, std::string>& m) {
  std::string s = "meter_id,bus\n";
  for (const auto& [meter, bus] : m) s += meter + "," + bus + "\n";
  return s;
}

std::string matrix_csv(const TimeGrid& grid, const std::vector<std::string>& names, const Eigen::MatrixXd& m) {
  std::string s = "timestamp";
  for (const auto& n : names) s += "," + n;
  s += '\n';
  for (Eigen::Index t = 0; t < m.cols(); ++t) {
    s += format_iso8601(grid[static_cast<std::size_t>(t)]);
    for (Eigen::Index r = 0; r < m.rows(); ++r) s += "," + format_double(m(r, t));
    s += '\n';
  }
  return s;
}

ProfileTable load_profiles(const std::string& csv, const std::string& meta, GridPolicy policy) {
  auto table = read_profiles_csv(csv, policy);
  if (!meta.empty()) apply_metadata(table.profiles, read_meter_metadata_csv(meta));
  return table;
}

struct Outputs {
  fs::path dir;
  fs::path file(const std::string& name) const {
    fs::create_directories(dir);
    return dir / name;
  }
};

void emit(std::ostream& out, bool as_json, const json& summary, const std::string& text) {
  if (as_json)
    out << summary.dump(2) << '\n';
  else
    out << text;
}

json partition_json(const Partition& p, const SimilarityGraph& g, int k, double seconds) {
  json clusters = json::array();
  for (const auto& c : p.clusters) {
    json ids = json::array();
    for (int u : c) ids.push_back(g.node_ids[static_cast<std::size_t>(u)]);
    clusters.push_back(ids);
  }
  const auto q = quality(p, g, k);
  return {{"clusters", clusters},
          {"sizes", p.sizes()},
          {"optimal", p.optimal},
          {"unbalance", q.unbalance},
          {"intra_weight", q.intra_weight},
          {"wall_time_s", seconds}};
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Privacy-preserving smart-meter data for low-voltage network simulation"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string out_dir = "out", format = "text", config_path;
  std::uint64_t seed = 42;
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  app.add_option("--out", out_dir, "Output directory; nothing is written elsewhere");
  app.add_option("--seed", seed, "Seed for every stochastic step");
  app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--format", format, "Report format on standard output")->check(CLI::IsMember({"text", "json"}));
  app.add_option("--config", config_path, "TOML or JSON configuration file");

  // generate
  auto* gen = app.add_subcommand("generate", "Write the synthetic six-network reference case");
  int gen_days = 7;
  gen->add_option("--days", gen_days, "Horizon in days");

  // partition
  auto* part = app.add_subcommand("partition", "Balanced partition of an edge-list graph");
  std::string edges_path, method = "rsgp";
  int part_k = 3;
  double time_limit = 10.0;
  part->add_option("--edges", edges_path, "Edge list `u v weight`")->required()->check(CLI::ExistingFile);
  part->add_option("--k", part_k, "Target cluster size");
  part->add_option("--method", method)->check(CLI::IsMember({"ip", "sgp", "rsgp"}));
  part->add_option("--time-limit", time_limit, "Seconds per exact solve");

  // allocate
  auto* alloc = app.add_subcommand("allocate", "Two-stage allocation of database profiles to unknown loads");
  std::string net_path, db_path, db_meta, known_path, trafo_path;
  double eps_e = 0.05, eps_p = 0.01, tol = 1e-6;
  alloc->add_option("--network", net_path)->required()->check(CLI::ExistingFile);
  alloc->add_option("--database", db_path, "Database profiles CSV")->required()->check(CLI::ExistingFile);
  alloc->add_option("--database-meta", db_meta, "Database metadata CSV")->required()->check(CLI::ExistingFile);
  alloc->add_option("--known", known_path, "Profiles CSV holding the known loads' meters")->check(CLI::ExistingFile);
  alloc->add_option("--transformer", trafo_path, "CSV with the transformer series in its first column")
      ->required()
      ->check(CLI::ExistingFile);
  alloc->add_option("--eps-energy", eps_e);
  alloc->add_option("--eps-power", eps_p);
  alloc->add_option("--tol", tol);

  // anonymize
  auto* anon = app.add_subcommand("anonymize", "Group meters and write the exchange file");
  std::string prof_path, meta_path, loc_path, scenario = "EnergyMaxP";
  int anon_k = 3, threshold = 3;
  bool dump_features = false, dump_distances = false;
  anon->add_option("--profiles", prof_path)->required()->check(CLI::ExistingFile);
  anon->add_option("--meta", meta_path)->required()->check(CLI::ExistingFile);
  anon->add_option("--locations", loc_path, "Private meter -> bus CSV")->required()->check(CLI::ExistingFile);
  anon->add_option("--scenario", scenario);
  anon->add_option("--k", anon_k);
  anon->add_option("--threshold", threshold);
  anon->add_flag("--dump-features", dump_features);
  anon->add_flag("--dump-distances", dump_distances);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Monte Carlo load flows from an exchange file");
  std::string exch_path, sim_net, sim_prof;
  int sim_iter = 200;
  double sim_pf = 1.0;
  sim->add_option("--exchange", exch_path)->required()->check(CLI::ExistingFile);
  sim->add_option("--network", sim_net)->required()->check(CLI::ExistingFile);
  sim->add_option("--profiles", sim_prof)->required()->check(CLI::ExistingFile);
  sim->add_option("--n-iter", sim_iter)->check(CLI::PositiveNumber);
  sim->add_option("--pf", sim_pf);

  // loadflow
  auto* lf = app.add_subcommand("loadflow", "Time-series load flow");
  std::string lf_net, lf_prof, lf_loc;
  double lf_pf = 1.0;
  lf->add_option("--network", lf_net)->required()->check(CLI::ExistingFile);
  lf->add_option("--profiles", lf_prof, "Profiles CSV; columns are buses unless --locations is given")
      ->required()
      ->check(CLI::ExistingFile);
  lf->add_option("--locations", lf_loc, "meter -> bus CSV")->check(CLI::ExistingFile);
  lf->add_option("--pf", lf_pf);

  // bench
  auto* bench = app.add_subcommand("bench", "Synthetic reference study");
  int n_iter = 200, bench_k = 3, bench_threshold = 3, bench_days = 7;
  std::string bench_method = "both";
  std::vector<std::string> scenarios{"all"};
  bool paper_literal = false, svg = false;
  double bench_eps_e = 0.05, bench_eps_p = 0.01, bench_pf = 1.0;
  bench->add_option("--n-iter", n_iter)->check(CLI::PositiveNumber);
  bench->add_option("--scenario", scenarios, "Scenario names or `all`");
  bench->add_option("--method", bench_method)->check(CLI::IsMember({"allocation", "smanet", "both"}));
  bench->add_option("--k", bench_k);
  bench->add_option("--threshold", bench_threshold);
  bench->add_option("--days", bench_days);
  bench->add_option("--eps-energy", bench_eps_e);
  bench->add_option("--eps-power", bench_eps_p);
  bench->add_option("--pf", bench_pf);
  bench->add_flag("--paper-literal", paper_literal, "Divide the voltage MSE by the bus count only");
  bench->add_flag("--svg", svg, "Also write a convergence plot");

  // report
  auto* report = app.add_subcommand("report", "Summarise a study.json");
  std::string study_path;
  report->add_option("--study", study_path)->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  const bool as_json = format == "json";
  try {
    const json cfg = load_config(config_path);
    out_dir = pick<std::string>(app, "--out", out_dir, cfg, "out", out_dir);
    seed = pick<std::uint64_t>(app, "--seed", seed, cfg, "seed", seed);
    jobs = pick<int>(app, "--jobs", jobs, cfg, "jobs", jobs);
    const Outputs outputs{out_dir};

    if (*gen) {
      auto spec = SynthSpec::reference();
      spec.days = pick<int>(*gen, "--days", gen_days, cfg, "days", spec.days);
      spec.seed = seed;
      const auto ref = synth_reference(spec);
      const fs::path dir = outputs.dir;
      fs::create_directories(dir / "networks");
      fs::create_directories(dir / "profiles");
      fs::create_directories(dir / "private");
      fs::create_directories(dir / "transformer");
      json summary = {{"networks", json::array()}};
      for (std::size_t n = 0; n < ref.networks.size(); ++n) {
        const auto& net = ref.networks[n];
        write_network_json(dir / "networks" / (net.name + ".json"), net);
        write_profiles_csv(dir / "profiles" / (net.name + ".csv"), ref.grid, ref.meters[n].profiles);
        write_meter_metadata_csv(dir / "profiles" / (net.name + "_meta.csv"), ref.meters[n].profiles);
        write_text_file(dir / "private" / (net.name + "_locations.csv"), locations_csv(ref.meter_bus[n]));
        LoadAssignment truth;
        for (const auto& p : ref.meters[n].profiles) truth.bus_power_w[ref.meter_bus[n].at(p.meter_id)] = p.power_w;
        const auto flow = solve_series(net, truth);
        write_text_file(dir / "transformer" / (net.name + ".csv"),
                        matrix_csv(ref.grid, {"transformer"}, flow.p_trafo_w.transpose()));
        summary["networks"].push_back({{"name", net.name},
                                       {"meters", ref.meters[n].profiles.size()},
                                       {"known", net.known_loads.size()},
                                       {"unknown", net.unknown_loads.size()}});
      }
      write_profiles_csv(dir / "database.csv", ref.grid, ref.database.entries);
      write_meter_metadata_csv(dir / "database_meta.csv", ref.database.entries);
      std::ostringstream text;
      for (const auto& n : summary["networks"])
        text << n["name"].get<std::string>() << ": " << n["meters"] << " meters (" << n["known"] << " fixed)\n";
      emit(out, as_json, summary, text.str());
      return 0;
    }

    if (*part) {
      const auto g = parse_edge_list(read_text_file(edges_path));
      const int k = pick<int>(*part, "--k", part_k, cfg, "k", part_k);
      const auto t0 = std::chrono::steady_clock::now();
      Partition p;
      if (method == "ip") {
        IpOptions o;
        o.time_limit_s = time_limit;
        p = ip_partition(g, {k, std::nullopt}, o);
      } else if (method == "sgp") {
        p = sgp_partition(g, k);
      } else {
        p = rsgp(g, k, time_limit);
      }
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      auto doc = partition_json(p, g, k, secs);
      doc["method"] = method;
      doc["k"] = k;
      auto stable = doc;
      stable.erase("wall_time_s");
      write_text_file(outputs.file("partition.json"), stable.dump(2) + "\n");
      out << doc.dump(2) << '\n';
      return 0;
    }

    if (*alloc) {
      const auto net = read_network_json(net_path);
      auto db = load_profiles(db_path, db_meta, GridPolicy::Strict);
      const auto trafo = read_profiles_csv(trafo_path);
      if (!(trafo.grid == db.grid)) throw Error("transformer series and database use different time grids");
      if (trafo.profiles.empty()) throw Error("transformer file has no series");
      Stage2Inputs in;
      in.transformer_w = trafo.profiles.front().power_w;
      if (!net.known_loads.empty()) {
        if (known_path.empty()) throw UsageError("--known is required for networks with known loads");
        const auto known = read_profiles_csv(known_path);
        if (!(known.grid == db.grid)) throw Error("known loads and database use different time grids");
        for (const auto& [bus, meter] : net.known_loads) {
          const auto* p = known.find(meter);
          if (!p) throw Error("no series for known meter '" + meter + "'");
          in.known_w[bus] = p->power_w;
        }
      }
      AllocationConfig ac;
      ac.eps_energy = pick<double>(*alloc, "--eps-energy", eps_e, cfg, "eps_energy", ac.eps_energy);
      ac.eps_power = pick<double>(*alloc, "--eps-power", eps_p, cfg, "eps_power", ac.eps_power);
      if (cfg.contains("k_per_category"))
        for (const auto& [name, v] : cfg.at("k_per_category").items()) ac.k_per_category[parse_category(name)] = v.get<int>();
      ProjectionOptions po;
      po.tol = pick<double>(*alloc, "--tol", tol, cfg, "tol", po.tol);
      LoadDatabase database{std::move(db.profiles)};
      const auto res = allocation_pipeline(net, database, db.grid, in, ac, po);

      std::vector<LoadProfile> series;
      for (const auto& [bus, p] : res.bus_power_w) series.push_back({bus, LoadCategory::House, p, 1});
      write_profiles_csv(outputs.file("allocated.csv"), db.grid, series);
      json alpha = json::object();
      for (std::size_t n = 0; n < net.unknown_loads.size(); ++n)
        alpha[net.unknown_loads[n].bus] = database.entries[static_cast<std::size_t>(res.stage1.assignment[n])].meter_id;
      json k_used = json::object();
      for (const auto& [c, k] : res.stage1.k_used) k_used[std::string(to_string(c))] = k;
      const json doc = {{"network", net.name},
                        {"eps_energy", ac.eps_energy},
                        {"eps_power", ac.eps_power},
                        {"assignment", alpha},
                        {"k", k_used},
                        {"stage1_objective_j2", res.stage1.objective},
                        {"stage2_objective_w2", res.stage2.objective},
                        {"stage2_max_violation", res.stage2.max_violation},
                        {"stage2_sweeps", res.stage2.sweeps},
                        {"stage2_converged", res.stage2.converged}};
      write_text_file(outputs.file("allocation_report.json"), doc.dump(2) + "\n");
      std::ostringstream text;
      text << "allocated " << net.unknown_loads.size() << " loads in " << net.name << "; stage-2 "
           << (res.stage2.converged ? "converged" : "did not converge") << " after " << res.stage2.sweeps
           << " sweeps (max violation " << res.stage2.max_violation << ")\n";
      emit(out, as_json, doc, text.str());
      return res.stage2.converged ? 0 : 1;
    }

    if (*anon) {
      const auto table = load_profiles(prof_path, meta_path, GridPolicy::Strict);
      const auto locations = read_locations_csv(loc_path);
      GroupingOptions go;
      go.scenario.kind = parse_scenario(pick<std::string>(*anon, "--scenario", scenario, cfg, "scenario", scenario));
      go.k = pick<int>(*anon, "--k", anon_k, cfg, "k", anon_k);
      go.threshold = pick<int>(*anon, "--threshold", threshold, cfg, "threshold", threshold);
      go.seed = seed;
      GroupingDetail detail;
      const auto x = build_groups(table.profiles, table.grid, locations, go, &detail);
      write_exchange_json(outputs.file("exchange.json"), x);
      const auto audit = anonymity_audit(x, detail.features);
      json groups = json::array();
      for (const auto& g : audit.groups)
        groups.push_back({{"id", g.id}, {"size", g.size}, {"max_distance", g.max_distance},
                          {"mean_distance", g.mean_distance}, {"flagged", g.flagged}});
      const json doc = {{"scenario", to_string(go.scenario.kind)},
                        {"groups", x.groups.size()},
                        {"fixed", x.fixed.size()},
                        {"audit_percentile", audit.percentile},
                        {"audit_threshold", audit.threshold},
                        {"audit", groups},
                        {"warnings", detail.warnings}};
      write_text_file(outputs.file("audit.json"), doc.dump(2) + "\n");
      if (dump_features) write_text_file(outputs.file("features.csv"), feature_matrix_csv(detail.features));
      if (dump_distances) write_text_file(outputs.file("distances.csv"), distance_matrix_csv(distance_matrix(detail.features)));
      std::ostringstream text;
      text << x.groups.size() << " groups, " << x.fixed.size() << " fixed meters; "
           << std::count_if(audit.groups.begin(), audit.groups.end(), [](const GroupAudit& g) { return g.flagged; })
           << " groups above the audit threshold\n";
      emit(out, as_json, doc, text.str());
      return 0;
    }

    if (*sim) {
      const auto x = read_exchange_json(exch_path);
      const auto net = read_network_json(sim_net);
      const auto table = read_profiles_csv(sim_prof);
      const int iters = pick<int>(*sim, "--n-iter", sim_iter, cfg, "n_iter", sim_iter);
      PowerFlowOptions po;
      std::ostringstream csv;
      csv << "iteration,seed,v_min_pu,i_max_a,p_trafo_max_w,nonconverged\n";
      const RadialSolver solver(net, po.s_base_va);
      for (int i = 0; i < iters; ++i) {
        const auto s = sample_assignment(x, seed + static_cast<std::uint64_t>(i));
        auto la = realise(s, table);
        la.power_factor = pick<double>(*sim, "--pf", sim_pf, cfg, "pf", sim_pf);
        const auto [p, tp] = load_matrix(net, la);
        const auto f = solver.solve_series(p, tp, po);
        csv << i << ',' << s.seed << ',' << format_double(f.v_pu.minCoeff()) << ','
            << format_double(f.i_a.size() ? f.i_a.maxCoeff() : 0.0) << ',' << format_double(f.p_trafo_w.maxCoeff())
            << ',' << f.n_nonconverged() << '\n';
      }
      write_text_file(outputs.file("simulate.csv"), csv.str());
      emit(out, as_json, {{"iterations", iters}, {"output", (outputs.dir / "simulate.csv").string()}},
           std::to_string(iters) + " load-flow runs written to " + (outputs.dir / "simulate.csv").string() + "\n");
      return 0;
    }

    if (*lf) {
      const auto net = read_network_json(lf_net);
      const auto table = read_profiles_csv(lf_prof);
      LoadAssignment la;
      la.power_factor = pick<double>(*lf, "--pf", lf_pf, cfg, "pf", lf_pf);
      if (!lf_loc.empty()) {
        AssignmentSample s;
        for (const auto& [m, b] : read_locations_csv(lf_loc))
          if (table.find(m)) s.mapping[m] = b;
        la.bus_power_w = realise(s, table).bus_power_w;
      } else {
        for (const auto& p : table.profiles) la.bus_power_w[p.meter_id] = p.power_w;
      }
      PowerFlowOptions po;
      po.jobs = jobs;
      po.warm_start = jobs == 1;
      const auto f = solve_series(net, la, po);
      std::vector<std::string> buses, lines;
      for (const auto& b : net.buses) buses.push_back(b.id);
      for (const auto& l : net.lines) lines.push_back(l.from_bus + "-" + l.to_bus);
      write_text_file(outputs.file("v_pu.csv"), matrix_csv(table.grid, buses, f.v_pu));
      write_text_file(outputs.file("i_a.csv"), matrix_csv(table.grid, lines, f.i_a));
      write_text_file(outputs.file("p_trafo_w.csv"), matrix_csv(table.grid, {"transformer"}, f.p_trafo_w.transpose()));
      const json doc = {{"network", net.name},
                        {"timesteps", f.v_pu.cols()},
                        {"v_min_pu", f.v_pu.minCoeff()},
                        {"v_max_pu", f.v_pu.maxCoeff()},
                        {"nonconverged", f.n_nonconverged()}};
      emit(out, as_json, doc,
           "load flow over " + std::to_string(f.v_pu.cols()) + " steps, V in [" + format_double(f.v_pu.minCoeff()) +
               ", " + format_double(f.v_pu.maxCoeff()) + "] pu, " + std::to_string(f.n_nonconverged()) +
               " non-converged\n");
      return 0;
    }

    if (*bench) {
      auto spec = SynthSpec::reference();
      spec.days = pick<int>(*bench, "--days", bench_days, cfg, "days", spec.days);
      spec.seed = seed;
      StudyOptions so;
      so.n_iter = pick<int>(*bench, "--n-iter", n_iter, cfg, "n_iter", so.n_iter);
      so.base_seed = seed;
      so.k = pick<int>(*bench, "--k", bench_k, cfg, "k", so.k);
      so.threshold = pick<int>(*bench, "--threshold", bench_threshold, cfg, "threshold", so.threshold);
      so.method = parse_method(pick<std::string>(*bench, "--method", bench_method, cfg, "method", bench_method));
      so.allocation.eps_energy = pick<double>(*bench, "--eps-energy", bench_eps_e, cfg, "eps_energy", bench_eps_e);
      so.allocation.eps_power = pick<double>(*bench, "--eps-power", bench_eps_p, cfg, "eps_power", bench_eps_p);
      so.power_factor = pick<double>(*bench, "--pf", bench_pf, cfg, "pf", bench_pf);
      so.paper_literal = paper_literal || (cfg.contains("paper_literal") && cfg.at("paper_literal").get<bool>());
      so.jobs = jobs;
      const auto names = pick<std::vector<std::string>>(*bench, "--scenario", scenarios, cfg, "scenarios", scenarios);
      so.scenarios.clear();
      for (const auto& s : names) {
        if (s == "all") {
          so.scenarios.assign(std::begin(kAllScenarios), std::end(kAllScenarios));
          break;
        }
        so.scenarios.push_back(parse_scenario(s));
      }
      const auto ref = synth_reference(spec);
      const auto rep = run_study(ref, so);
      write_study_outputs(outputs.dir, rep, svg);
      std::ostringstream text;
      if (rep.has_allocation)
        for (const auto& n : rep.allocation.per_network)
          text << "allocation " << n.network << ": MSE_vm " << n.kpi.mse_vm << ", E_maxTRL " << n.kpi.e_max_trl
               << ", E_maxLNL " << n.kpi.e_max_lnl << ", E_minVM " << n.kpi.e_min_vm << '\n';
      for (const auto& s : rep.scenarios)
        text << "smanet " << to_string(s.scenario) << ": MSE_vm " << s.mse_mean << " +/- " << s.mse_std << " ("
             << s.n_groups << " groups)\n";
      emit(out, as_json, json::parse(study_to_json(rep)), text.str());
      return 0;
    }

    if (*report) {
      json doc;
      try {
        doc = json::parse(read_text_file(study_path));
      } catch (const json::exception& e) {
        throw Error(std::string("malformed study file: ") + e.what());
      }
      json table = json::array();
      std::ostringstream text;
      text << "scenario      mse_vm_mean      mse_vm_std       e_max_trl        e_max_lnl        e_min_vm\n";
      for (const auto& s : doc.value("scenarios", json::array())) {
        const auto& km = s.at("kpi_mean");
        table.push_back({{"scenario", s.at("scenario")}, {"mse_vm_mean", s.at("mse_vm_mean")},
                         {"mse_vm_std", s.at("mse_vm_std")}, {"kpi_mean", km}});
        char buf[256];
        std::snprintf(buf, sizeof buf, "%-12s  %-15.6g  %-15.6g  %-15.6g  %-15.6g  %-15.6g\n",
                      s.at("scenario").get<std::string>().c_str(), s.at("mse_vm_mean").get<double>(),
                      s.at("mse_vm_std").get<double>(), km.value("e_max_trl", 0.0), km.value("e_max_lnl", 0.0),
                      km.value("e_min_vm", 0.0));
        text << buf;
      }
      emit(out, as_json, table, text.str());
      return 0;
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const CLI::Error& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace smanon

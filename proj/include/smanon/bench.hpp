#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "smanon/allocate.hpp"
#include "smanon/anonymize.hpp"
#include "smanon/features.hpp"
#include "smanon/model.hpp"
#include "smanon/powerflow.hpp"

namespace smanon {

// ---- KPIs ------------------------------------------------------------------------------------

/// Timesteps converged in both results.
std::vector<char> common_mask(const PowerFlowResult& test, const PowerFlowResult& ref);

struct SquaredError {
  double sse = 0.0;    // sum over buses and kept timesteps
  long buses = 0;
  long timesteps = 0;
};
SquaredError voltage_squared_error(const PowerFlowResult& test, const PowerFlowResult& ref);

/// Mean of (V - V_ref)^2 over buses and timesteps; `paper_literal` divides by the bus count only.
double kpi_mse_vm(const PowerFlowResult& test, const PowerFlowResult& ref, bool paper_literal = false);
/// Relative error of the peak transformer power.
double kpi_max_trl(const PowerFlowResult& test, const PowerFlowResult& ref);
/// Relative error of the peak line current.
double kpi_max_lnl(const PowerFlowResult& test, const PowerFlowResult& ref);
/// Relative error of the lowest bus voltage.
double kpi_min_vm(const PowerFlowResult& test, const PowerFlowResult& ref);

struct KpiReport {
  double mse_vm = 0.0;
  double e_max_trl = 0.0;
  double e_max_lnl = 0.0;
  double e_min_vm = 0.0;
  int dropped_timesteps = 0;
};
KpiReport compute_kpis(const PowerFlowResult& test, const PowerFlowResult& ref, bool paper_literal = false);

// ---- Synthetic reference ---------------------------------------------------------------------

struct SynthNetworkSpec {
  std::string name;
  std::map<LoadCategory, int> counts;
  std::map<LoadCategory, double> median_kwh;  // annual
  int multi_customer_apartments = 0;
};

struct SynthDatabaseGroup {
  LoadCategory category;
  int count;
  double median_kwh;  // annual
};

struct SynthSpec {
  std::vector<SynthNetworkSpec> networks;
  std::vector<SynthDatabaseGroup> database;
  std::string start = "2021-01-04T00:00:00Z";
  int days = 7;
  int step_s = 900;
  double energy_shape = 3.0;     // log-logistic shape of annual energies
  double noise_sigma = 0.35;     // multiplicative per-step noise
  int loads_per_junction = 4;
  double trunk_r_ohm_km = 0.125, trunk_x_ohm_km = 0.07, trunk_len_m[2] = {20.0, 50.0};
  double service_r_ohm_km = 0.32, service_x_ohm_km = 0.08, service_len_m[2] = {10.0, 40.0};
  double trunk_ampacity_a = 400.0, service_ampacity_a = 150.0;
  std::uint64_t seed = 1;

  /// Six networks and the two-source database with the published counts and medians.
  static SynthSpec reference();
  void validate() const;
};

struct SynthReference {
  TimeGrid grid;
  std::vector<Network> networks;             // known loads = multi-customer meters
  std::vector<ProfileTable> meters;          // per network, all metered loads
  std::vector<std::map<std::string, std::string>> meter_bus;  // per network, private truth
  LoadDatabase database;
};

/// Annual energy of quantile i of n for the given median (log-logistic, median exact).
double synth_energy_quantile(int i, int n, double median, double shape);

SynthReference synth_reference(const SynthSpec& spec);

// ---- Study -----------------------------------------------------------------------------------

enum class Method { Allocation, Smanet, Both };
std::string_view to_string(Method m);
Method parse_method(std::string_view text);

struct StudyOptions {
  Method method = Method::Both;
  std::vector<Scenario> scenarios{std::begin(kAllScenarios), std::end(kAllScenarios)};
  int n_iter = 200;
  std::uint64_t base_seed = 42;
  int k = 3;
  int threshold = 3;
  double pca_variance_target = 0.99;
  AllocationConfig allocation;
  ProjectionOptions projection;
  PowerFlowOptions powerflow;
  double power_factor = 1.0;
  bool paper_literal = false;
  int jobs = 1;
  double ip_time_limit_s = 10.0;
  double audit_percentile = 0.95;
};

struct NetworkKpis {
  std::string network;
  KpiReport kpi;
};

struct AllocationReport {
  std::vector<NetworkKpis> per_network;
  double max_balance_violation = 0.0;   // worst |1 - P^var_trafo / P^ref| - eps_P over all steps
  double max_loadflow_trafo_error = 0.0;  // worst |1 - P^trafo / P^ref| of the allocated load flow
  double max_energy_violation = 0.0;
  bool all_converged = true;
  std::vector<std::string> errors;       // networks where allocation failed
};

struct ScenarioReport {
  Scenario scenario;
  int n_groups = 0;
  std::vector<int> group_sizes;
  std::vector<double> mse_per_iter;          // pooled over all networks
  std::vector<double> cumulative_mse;
  std::vector<double> estimate_variance;     // s_n^2 / n, NaN for n < 2
  double convergence_slope = 0.0;
  double mse_mean = 0.0, mse_std = 0.0;
  std::map<std::string, double> kpi_mean, kpi_std;  // e_max_trl, e_max_lnl, e_min_vm (pooled per iteration mean over networks)
  std::vector<NetworkKpis> per_network_mean;
  int flagged_groups = 0;
  int dropped_timesteps = 0;
};

struct StudyReport {
  int n_iter = 0;
  std::uint64_t base_seed = 0;
  bool paper_literal = false;
  int timesteps = 0;
  std::vector<std::string> networks;
  std::map<std::string, double> reference_v_min;
  std::map<std::string, double> reference_v_max;
  bool has_allocation = false;
  AllocationReport allocation;
  std::vector<ScenarioReport> scenarios;
};

/// Least-squares slope of log(var_n) against log(n) over n = first..N.
double log_log_slope(const std::vector<double>& variance, int first = 10);

/// Running mean and s_n^2 / n of a sequence.
void running_statistics(const std::vector<double>& x, std::vector<double>& mean, std::vector<double>& var_of_mean);

StudyReport run_study(const SynthReference& ref, const StudyOptions& opts);

// ---- Report output ---------------------------------------------------------------------------

std::string study_to_json(const StudyReport& r);
std::string convergence_csv(const StudyReport& r);
std::string kpi_table_csv(const StudyReport& r);
std::string mse_histogram_csv(const StudyReport& r, int bins = 20);
std::string convergence_svg(const StudyReport& r);

/// Writes study.json, convergence.csv, kpi_table.csv, mse_histogram.csv and, when asked,
/// convergence.svg into `dir`.
void write_study_outputs(const std::filesystem::path& dir, const StudyReport& r, bool svg);

}  // namespace smanon

#include <algorithm>
#include <cmath>
#include <limits>

#include "smanon/bench.hpp"

namespace smanon {

namespace {

void check_shapes(const PowerFlowResult& test, const PowerFlowResult& ref) {
  if (test.v_pu.rows() != ref.v_pu.rows() || test.v_pu.cols() != ref.v_pu.cols() ||
      test.i_a.rows() != ref.i_a.rows() || test.i_a.cols() != ref.i_a.cols() ||
      test.p_trafo_w.size() != ref.p_trafo_w.size())
    throw Error("KPI inputs have mismatched shapes");
}

template <typename F>
double masked_max(const std::vector<char>& mask, Eigen::Index rows, F&& value) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < mask.size(); ++t)
    if (mask[t])
      for (Eigen::Index r = 0; r < rows; ++r) m = std::max(m, value(r, static_cast<Eigen::Index>(t)));
  return m;
}

double relative(double test, double ref, const char* what) {
  if (ref == 0.0) throw Error(std::string("reference ") + what + " is zero");
  return (test - ref) / ref;
}

}  // namespace

std::vector<char> common_mask(const PowerFlowResult& test, const PowerFlowResult& ref) {
  const auto T = static_cast<std::size_t>(ref.v_pu.cols());
  std::vector<char> mask(T, 1);
  for (std::size_t t = 0; t < T; ++t) {
    if (t < test.converged.size() && !test.converged[t]) mask[t] = 0;
    if (t < ref.converged.size() && !ref.converged[t]) mask[t] = 0;
  }
  return mask;
}

SquaredError voltage_squared_error(const PowerFlowResult& test, const PowerFlowResult& ref) {
  check_shapes(test, ref);
  const auto mask = common_mask(test, ref);
  SquaredError e;
  e.buses = ref.v_pu.rows();
  for (std::size_t t = 0; t < mask.size(); ++t) {
    if (!mask[t]) continue;
    const auto c = static_cast<Eigen::Index>(t);
    e.sse += (test.v_pu.col(c) - ref.v_pu.col(c)).squaredNorm();
    ++e.timesteps;
  }
  return e;
}

double kpi_mse_vm(const PowerFlowResult& test, const PowerFlowResult& ref, bool paper_literal) {
  const auto e = voltage_squared_error(test, ref);
  if (e.buses == 0 || e.timesteps == 0) throw Error("no converged timesteps to compare");
  return paper_literal ? e.sse / static_cast<double>(e.buses)
                       : e.sse / (static_cast<double>(e.buses) * static_cast<double>(e.timesteps));
}

double kpi_max_trl(const PowerFlowResult& test, const PowerFlowResult& ref) {
  check_shapes(test, ref);
  const auto mask = common_mask(test, ref);
  const double a = masked_max(mask, 1, [&](Eigen::Index, Eigen::Index t) { return test.p_trafo_w[t]; });
  const double b = masked_max(mask, 1, [&](Eigen::Index, Eigen::Index t) { return ref.p_trafo_w[t]; });
  return relative(a, b, "peak transformer power");
}

double kpi_max_lnl(const PowerFlowResult& test, const PowerFlowResult& ref) {
  check_shapes(test, ref);
  const auto mask = common_mask(test, ref);
  const double a = masked_max(mask, test.i_a.rows(), [&](Eigen::Index r, Eigen::Index t) { return test.i_a(r, t); });
  const double b = masked_max(mask, ref.i_a.rows(), [&](Eigen::Index r, Eigen::Index t) { return ref.i_a(r, t); });
  return relative(a, b, "peak line current");
}

double kpi_min_vm(const PowerFlowResult& test, const PowerFlowResult& ref) {
  check_shapes(test, ref);
  const auto mask = common_mask(test, ref);
  const double a = -masked_max(mask, test.v_pu.rows(), [&](Eigen::Index r, Eigen::Index t) { return -test.v_pu(r, t); });
  const double b = -masked_max(mask, ref.v_pu.rows(), [&](Eigen::Index r, Eigen::Index t) { return -ref.v_pu(r, t); });
  return relative(a, b, "minimum voltage");
}

KpiReport compute_kpis(const PowerFlowResult& test, const PowerFlowResult& ref, bool paper_literal) {
  KpiReport r;
  r.mse_vm = kpi_mse_vm(test, ref, paper_literal);
  r.e_max_trl = kpi_max_trl(test, ref);
  r.e_max_lnl = kpi_max_lnl(test, ref);
  r.e_min_vm = kpi_min_vm(test, ref);
  const auto mask = common_mask(test, ref);
  r.dropped_timesteps = static_cast<int>(std::count(mask.begin(), mask.end(), 0));
  return r;
}

}  // namespace smanon

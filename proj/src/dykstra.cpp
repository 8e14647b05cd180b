#include <algorithm>
#include <cmath>

#include "smanon/allocate.hpp"

namespace smanon {

namespace {

double relative_gap(double value, double lo, double hi, double ref) {
  const double gap = std::max({lo - value, value - hi, 0.0});
  if (gap == 0.0) return 0.0;
  return ref != 0.0 ? gap / std::abs(ref) : gap;
}

// Shifts the free entries of `v` equally so that `scale * sum` lands on the nearest edge of
// [lo, hi]. Pinned entries are zero on the target set, so leaving them out of the sum gives the
// same intersection with a cheaper geometry.
template <typename Vec, typename Mask>
void project_sum(Vec&& v, const Mask& pinned, double scale, double lo, double hi) {
  double s = 0.0;
  int n_free = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!pinned(i)) {
      s += v(i);
      ++n_free;
    }
  if (n_free == 0) return;
  s *= scale;
  double target;
  if (s > hi)
    target = hi;
  else if (s < lo)
    target = lo;
  else
    return;
  const double shift = (target - s) / (scale * n_free);
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!pinned(i)) v(i) += shift;
}

}  // namespace

double max_relative_violation(const Eigen::MatrixXd& x, const BandConstraints& c) {
  double worst = 0.0;
  for (Eigen::Index t = 0; t < x.cols(); ++t)
    worst = std::max(worst, relative_gap(x.col(t).sum(), c.col_lo[t], c.col_hi[t], c.col_ref[t]));
  for (Eigen::Index n = 0; n < x.rows(); ++n)
    worst = std::max(worst, relative_gap(x.row(n).sum() * c.step, c.row_lo[n], c.row_hi[n], c.row_ref[n]));
  return worst;
}

ProjectionResult dykstra_project(const Eigen::MatrixXd& x0, const BandConstraints& c,
                                 const ProjectionOptions& opts) {
  const Eigen::Index N = x0.rows(), T = x0.cols();
  if (c.col_lo.size() != T || c.col_hi.size() != T || c.col_ref.size() != T || c.row_lo.size() != N ||
      c.row_hi.size() != N || c.row_ref.size() != N || c.pinned.rows() != N || c.pinned.cols() != T)
    throw Error("projection bands do not match the matrix shape");
  if (!(c.step > 0.0)) throw Error("projection step must be positive");

  ProjectionResult res;
  if (N == 0 || T == 0) {
    res.x = x0;
    res.converged = true;
    return res;
  }
  Eigen::MatrixXd x = x0, y(N, T), prev(N, T);
  Eigen::MatrixXd p_col = Eigen::MatrixXd::Zero(N, T), p_row = p_col, p_orth = p_col;
  const double scale = std::max(x0.cwiseAbs().maxCoeff(), c.col_hi.cwiseAbs().maxCoeff() / std::max<Eigen::Index>(N, 1));
  const double change_tol = 1e-2 * opts.tol * (scale > 0.0 ? scale : 1.0);

  for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
    prev = x;

    y = x + p_col;
    x = y;
    for (Eigen::Index t = 0; t < T; ++t) project_sum(x.col(t), c.pinned.col(t), 1.0, c.col_lo[t], c.col_hi[t]);
    p_col = y - x;

    y = x + p_row;
    x = y;
    for (Eigen::Index n = 0; n < N; ++n)
      project_sum(x.row(n), c.pinned.row(n), c.step, c.row_lo[n], c.row_hi[n]);
    p_row = y - x;

    y = x + p_orth;
    x = c.pinned.select(0.0, y.cwiseMax(0.0));
    p_orth = y - x;

    res.sweeps = sweep;
    const double change = (x - prev).cwiseAbs().maxCoeff();
    if (change <= change_tol) {
      res.max_violation = max_relative_violation(x, c);
      if (res.max_violation < opts.tol) {
        res.converged = true;
        break;
      }
    }
  }
  if (!res.converged) res.max_violation = max_relative_violation(x, c);
  res.x = std::move(x);
  return res;
}

}  // namespace smanon

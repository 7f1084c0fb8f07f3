#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "retrocast/deconv.hpp"
#include "retrocast/errors.hpp"
#include "retrocast/series.hpp"

namespace retrocast {

struct NoiseEstimate {
  double sigma2 = 0.0;
  int poly_degree = 20;
  double fit_rss = 0.0;
  int dof_used = 0;  // n - degree - 1
};

struct CpCurve {
  std::vector<double> lambdas;    // valid grid points, ascending
  std::vector<double> cp_values;
  std::vector<double> dofs;
  std::vector<double> rss_values;
  double selected_lambda = 0.0;
  int n_skipped = 0;  // grid points dropped as SingularSystem
};

/// Noise variance from an overparametrized polynomial fit: least squares on a
/// Legendre basis over time rescaled to [-1,1], sigma2 = RSS/(n-degree-1).
inline NoiseEstimate estimate_sigma2(const DailySeries& y, int degree = 20) {
  const int n = static_cast<int>(y.size());
  if (degree < 0) throw Error("estimate_sigma2: degree must be >= 0");
  if (n <= degree + 1) {
    throw TooFewPoints("estimate_sigma2: need more than degree+1 = " +
                       std::to_string(degree + 1) + " points, got " + std::to_string(n));
  }
  Eigen::MatrixXd B(n, degree + 1);
  for (int i = 0; i < n; ++i) {
    const double x = n == 1 ? 0.0 : -1.0 + 2.0 * i / (n - 1.0);
    B(i, 0) = 1.0;
    if (degree >= 1) B(i, 1) = x;
    for (int k = 1; k + 1 <= degree; ++k) {
      B(i, k + 1) = ((2.0 * k + 1.0) * x * B(i, k) - k * B(i, k - 1)) / (k + 1.0);
    }
  }
  Eigen::Map<const Eigen::VectorXd> yv(y.values.data(), n);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(B);
  if (qr.rank() < degree + 1) {
    throw IllConditioned("estimate_sigma2: polynomial basis is rank deficient");
  }
  const Eigen::VectorXd coef = qr.solve(yv);
  NoiseEstimate est;
  est.poly_degree = degree;
  est.dof_used = n - degree - 1;
  est.fit_rss = (yv - B * coef).squaredNorm();
  est.sigma2 = est.fit_rss / est.dof_used;
  return est;
}

/// Default lambda grid: log-spaced over [lo, hi] scaled by tr(G'G)/tr(P'P),
/// which makes the two objective terms commensurate across cohorts.
inline std::vector<double> default_lambda_grid(const DeconvProblem& tmpl, int n_points = 40,
                                               double lo = 1e-4, double hi = 1e6) {
  if (n_points < 1) throw Error("default_lambda_grid: need at least one point");
  const Eigen::MatrixXd G = build_conv_matrix(tmpl.spec);
  const Eigen::MatrixXd P = penalty_matrix(tmpl.penalty, tmpl.spec.n_unknowns());
  const double scale = G.squaredNorm() / P.squaredNorm();
  std::vector<double> grid(static_cast<size_t>(n_points));
  const double l0 = std::log10(lo);
  const double l1 = std::log10(hi);
  for (int i = 0; i < n_points; ++i) {
    const double e = n_points == 1 ? l0 : l0 + (l1 - l0) * i / (n_points - 1.0);
    grid[static_cast<size_t>(i)] = scale * std::pow(10.0, e);
  }
  return grid;
}

/// Cp(lambda) = RSS(lambda)/sigma2 - n + 2*dof(lambda) over the grid, solving
/// the closed form at every point. Singular points are skipped; ties at the
/// minimum break toward the larger lambda.
inline CpCurve mallows_cp(const DeconvProblem& tmpl, const std::vector<double>& lambda_grid,
                          double sigma2) {
  if (tmpl.loss != DeconvLoss::quadratic) throw Error("mallows_cp requires quadratic loss");
  if (!(sigma2 > 0.0)) throw Error("mallows_cp: sigma2 must be positive");
  if (lambda_grid.empty()) throw Error("mallows_cp: empty lambda grid");
  std::vector<double> grid = lambda_grid;
  std::sort(grid.begin(), grid.end());
  const int n = tmpl.spec.n_obs;

  CpCurve curve;
  for (double lam : grid) {
    if (!(lam > 0.0)) throw Error("mallows_cp: grid must be positive");
    DeconvProblem p = tmpl;
    p.lambda = lam;
    p.compute_dof = true;  // Cp needs the hat-matrix trace regardless of caller settings
    DeconvSolution sol;
    try {
      sol = solve_quadratic_closed_form(p);
    } catch (const SingularSystem&) {
      ++curve.n_skipped;
      continue;
    }
    curve.lambdas.push_back(lam);
    curve.rss_values.push_back(sol.rss);
    curve.dofs.push_back(sol.dof);
    curve.cp_values.push_back(sol.rss / sigma2 - n + 2.0 * sol.dof);
  }
  if (curve.lambdas.empty()) {
    throw SingularSystem("mallows_cp: every grid point was singular");
  }

  // sanity: RSS must not decrease nor dof increase along the grid
  for (size_t i = 1; i < curve.lambdas.size(); ++i) {
    const double rss_slack = 1e-8 * (1.0 + std::abs(curve.rss_values[i]));
    const double dof_slack = 1e-8 * (1.0 + std::abs(curve.dofs[i]));
    if (curve.rss_values[i] < curve.rss_values[i - 1] - rss_slack ||
        curve.dofs[i] > curve.dofs[i - 1] + dof_slack) {
      throw Error("mallows_cp: RSS/dof monotonicity violated; solver failure suspected");
    }
  }

  double best = curve.cp_values[0];
  size_t best_i = 0;
  for (size_t i = 1; i < curve.cp_values.size(); ++i) {
    if (curve.cp_values[i] <= best) {  // <= so ties move toward larger lambda
      best = curve.cp_values[i];
      best_i = i;
    }
  }
  curve.selected_lambda = curve.lambdas[best_i];
  return curve;
}

}  // namespace retrocast

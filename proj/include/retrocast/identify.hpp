#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "retrocast/kernel.hpp"
#include "retrocast/series.hpp"

namespace retrocast {

/// Search configuration for exponential-kernel identification. The delay is
/// searched exhaustively over the integer grid, alpha by coarse grid followed
/// by golden-section refinement, and beta in closed form.
struct IdentConfig {
  enum class InputHistory {
    use_available,  // use every input sample the series provides
    zero_pad        // treat input samples outside the fitting window as zero
  };

  int delay_min = -15;
  int delay_max = 5;
  std::vector<double> alpha_grid = default_alpha_grid();
  double alpha_refine_tol = 1e-6;
  InputHistory history = InputHistory::use_available;

  static std::vector<double> default_alpha_grid() {
    std::vector<double> g;
    for (int i = 0; i <= 99; ++i) g.push_back(0.01 * i);
    return g;
  }
};

struct IdentResult {
  ExpKernel kernel;
  KernelStats stats;
  double rss = 0.0;
  std::vector<double> fitted_y;
  std::vector<double> residuals;
};

struct ProfileFit {
  double beta = 0.0;
  double rss = 0.0;
};

namespace detail {

/// Geometric filter of u extended beyond the sampled range: zero before the
/// first sample, alpha-decay of the last filtered value after the last one.
class FilteredInput {
 public:
  FilteredInput(std::span<const double> u, double alpha)
      : psi_(exp_filter(u, alpha)), alpha_(alpha) {}

  double at(long idx) const {
    if (idx < 0 || psi_.empty()) return 0.0;
    const long n = static_cast<long>(psi_.size());
    if (idx < n) return psi_[static_cast<size_t>(idx)];
    return psi_.back() * std::pow(alpha_, static_cast<double>(idx - n + 1));
  }

 private:
  std::vector<double> psi_;
  double alpha_;
};

}  // namespace detail

/// Least-squares profile of the linear kernel scale: for fixed (alpha, delay)
/// the model output is beta * phi with phi_t = sum_j alpha^j u_{t-j-delay},
/// so the optimal beta is <phi,y>/<phi,phi>, clipped at zero. u and y share a
/// day grid; y's first sample sits at index y_start_in_u of u.
inline ProfileFit profile_beta(double alpha, int delay, std::span<const double> u,
                               std::span<const double> y, int y_start_in_u = 0) {
  detail::FilteredInput phi_src(u, alpha);
  double sphi2 = 0.0, sphiy = 0.0, sy2 = 0.0;
  std::vector<double> phi(y.size());
  for (size_t t = 0; t < y.size(); ++t) {
    const double p = phi_src.at(static_cast<long>(t) + y_start_in_u - delay);
    phi[t] = p;
    sphi2 += p * p;
    sphiy += p * y[t];
    sy2 += y[t] * y[t];
  }
  if (sphi2 == 0.0) throw ZeroRegressor();
  double beta = sphiy / sphi2;
  if (beta < 0.0) beta = 0.0;
  double rss = 0.0;
  for (size_t t = 0; t < y.size(); ++t) {
    const double r = y[t] - beta * phi[t];
    rss += r * r;
  }
  return {beta, rss};
}

/// Fits (alpha, beta, delay) of the exponential kernel to an input/output
/// series pair by minimizing the output residual sum of squares. The fitting
/// window is y's support; u may extend before and after it (history is used
/// or zeroed according to cfg.history). Deterministic for fixed inputs.
inline IdentResult identify(const DailySeries& u, const DailySeries& y,
                            const IdentConfig& cfg = {}) {
  for (double v : u.values) {
    if (!std::isfinite(v)) throw NonFiniteInput("input series");
  }
  for (double v : y.values) {
    if (!std::isfinite(v)) throw NonFiniteInput("output series");
  }
  if (cfg.delay_min > cfg.delay_max || cfg.alpha_grid.empty()) {
    throw Error("identify: empty search grid");
  }

  std::vector<double> u_values = u.values;
  int y_offset = y.start - u.start;
  if (cfg.history == IdentConfig::InputHistory::zero_pad) {
    for (int i = 0; i < static_cast<int>(u_values.size()); ++i) {
      const bool inside = i >= y_offset && i < y_offset + y.size();
      if (!inside) u_values[static_cast<size_t>(i)] = 0.0;
    }
  }
  std::span<const double> us(u_values);
  std::span<const double> ys(y.values);

  const auto rss_at = [&](double alpha, int delay) {
    return profile_beta(alpha, delay, us, ys, y_offset).rss;
  };

  double best_rss = std::numeric_limits<double>::infinity();
  double best_alpha = 0.0;
  int best_delay = 0;
  bool any_valid = false;

  const double alpha_lo_bound = cfg.alpha_grid.front();
  const double alpha_hi_bound = cfg.alpha_grid.back();

  for (int delay = cfg.delay_min; delay <= cfg.delay_max; ++delay) {
    // coarse grid
    double grid_best_rss = std::numeric_limits<double>::infinity();
    size_t grid_best_i = 0;
    bool valid = true;
    for (size_t i = 0; i < cfg.alpha_grid.size(); ++i) {
      double r;
      try {
        r = rss_at(cfg.alpha_grid[i], delay);
      } catch (const ZeroRegressor&) {
        valid = false;  // regressor vanishes for every alpha at this delay
        break;
      }
      if (r < grid_best_rss) {
        grid_best_rss = r;
        grid_best_i = i;
      }
    }
    if (!valid) continue;
    any_valid = true;

    // golden-section refinement around the best grid point
    double a = cfg.alpha_grid[grid_best_i > 0 ? grid_best_i - 1 : 0];
    double b = cfg.alpha_grid[std::min(grid_best_i + 1, cfg.alpha_grid.size() - 1)];
    a = std::max(a, alpha_lo_bound);
    b = std::min(b, alpha_hi_bound);
    constexpr double inv_phi = 0.6180339887498949;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = rss_at(x1, delay);
    double f2 = rss_at(x2, delay);
    while (b - a > cfg.alpha_refine_tol) {
      if (f1 <= f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - inv_phi * (b - a);
        f1 = rss_at(x1, delay);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + inv_phi * (b - a);
        f2 = rss_at(x2, delay);
      }
    }
    double cand_alpha = f1 <= f2 ? x1 : x2;
    double cand_rss = std::min(f1, f2);
    if (grid_best_rss < cand_rss) {
      cand_alpha = cfg.alpha_grid[grid_best_i];
      cand_rss = grid_best_rss;
    }
    if (cand_rss < best_rss) {
      best_rss = cand_rss;
      best_alpha = cand_alpha;
      best_delay = delay;
    }
  }
  if (!any_valid) throw ZeroRegressor();

  const ProfileFit fit = profile_beta(best_alpha, best_delay, us, ys, y_offset);
  IdentResult result;
  result.kernel = {best_alpha, fit.beta, best_delay};
  result.stats = kernel_stats(result.kernel);
  result.rss = fit.rss;
  detail::FilteredInput phi_src(us, best_alpha);
  result.fitted_y.resize(y.values.size());
  result.residuals.resize(y.values.size());
  for (size_t t = 0; t < y.values.size(); ++t) {
    const double p = phi_src.at(static_cast<long>(t) + y_offset - best_delay);
    result.fitted_y[t] = fit.beta * p;
    result.residuals[t] = y.values[t] - result.fitted_y[t];
  }
  return result;
}

/// Model output for a given input series: the convolution of u with the
/// identified kernel, on u's date grid.
inline DailySeries predict(const IdentResult& result, const DailySeries& u) {
  DailySeries out = convolve(u, result.kernel);
  out.quantity = Quantity::hospital_admissions;
  return out;
}

}  // namespace retrocast

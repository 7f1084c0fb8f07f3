#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "retrocast/deconv.hpp"
#include "retrocast/errors.hpp"
#include "retrocast/identify.hpp"
#include "retrocast/model_select.hpp"
#include "retrocast/rng.hpp"
#include "retrocast/series.hpp"

namespace retrocast {

struct BootstrapConfig {
  int n_replicates_ident = 1000;
  int n_replicates_deconv = 500;
  std::uint64_t seed = 0;
  std::vector<double> percentiles = {2.5, 97.5};
  int kernel_band_horizon = 30;  // days of pointwise g_t bands from bootstrap_identify
};

struct BootstrapSummary {
  std::vector<std::string> scalar_names;
  Eigen::MatrixXd replicates;  // one row per successful replicate: scalars, then pointwise
  int n_scalars = 0;
  int n_pointwise = 0;
  std::vector<double> percentiles;
  Eigen::MatrixXd scalar_percentiles;     // n_scalars x percentiles
  Eigen::MatrixXd pointwise_percentiles;  // n_pointwise x percentiles
  std::optional<Date> pointwise_start;    // date of the first pointwise entry, when dated
  int n_requested = 0;
  int n_failed = 0;
};

/// Linear-interpolation quantile (Hyndman-Fan type 7, the convention used by
/// the CSV/JSON band outputs).
inline double percentile(std::vector<double> v, double p) {
  if (v.empty()) throw EmptyInput("percentile of empty vector");
  if (!(p > 0.0) || !(p < 100.0)) throw OutOfRange("percentile p must be in (0,100)");
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p / 100.0;
  const size_t lo = static_cast<size_t>(h);
  if (lo + 1 >= v.size()) return v.back();
  return v[lo] + (h - lo) * (v[lo + 1] - v[lo]);
}

/// y*_t = yhat_t + |e_t| v_t with v_t iid standard normal from `eng`.
inline std::vector<double> wild_resample(const std::vector<double>& y_hat,
                                         const std::vector<double>& residuals,
                                         std::mt19937_64& eng) {
  if (y_hat.size() != residuals.size()) throw Error("wild_resample: length mismatch");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> out(y_hat.size());
  for (size_t t = 0; t < y_hat.size(); ++t) {
    out[t] = y_hat[t] + std::abs(residuals[t]) * normal(eng);
  }
  return out;
}

namespace detail {

inline void check_bootstrap_config(const BootstrapConfig& cfg, int n_replicates) {
  if (n_replicates < 2) throw Error("bootstrap: need at least 2 replicates");
  for (double p : cfg.percentiles) {
    if (!(p > 0.0) || !(p < 100.0)) throw OutOfRange("bootstrap percentile outside (0,100)");
  }
}

inline void finalize_summary(BootstrapSummary& s) {
  const int n_perc = static_cast<int>(s.percentiles.size());
  s.scalar_percentiles.resize(s.n_scalars, n_perc);
  s.pointwise_percentiles.resize(s.n_pointwise, n_perc);
  std::vector<double> col(static_cast<size_t>(s.replicates.rows()));
  for (int c = 0; c < s.n_scalars + s.n_pointwise; ++c) {
    for (Eigen::Index r = 0; r < s.replicates.rows(); ++r) {
      col[static_cast<size_t>(r)] = s.replicates(r, c);
    }
    for (int k = 0; k < n_perc; ++k) {
      const double value = percentile(col, s.percentiles[static_cast<size_t>(k)]);
      if (c < s.n_scalars) {
        s.scalar_percentiles(c, k) = value;
      } else {
        s.pointwise_percentiles(c - s.n_scalars, k) = value;
      }
    }
  }
}

inline void check_failures(int n_failed, int n_requested) {
  if (n_failed * 10 > n_requested) throw TooManyFailures(n_failed, n_requested);
}

}  // namespace detail

/// Wild bootstrap of the identification step: refits the kernel on B resampled
/// admission series y* and summarizes (alpha, beta, delay, gain, time constant)
/// plus pointwise g_t bands over the configured horizon.
inline BootstrapSummary bootstrap_identify(const DailySeries& u, const DailySeries& y,
                                           const IdentResult& base, const BootstrapConfig& cfg,
                                           const IdentConfig& icfg = {}) {
  detail::check_bootstrap_config(cfg, cfg.n_replicates_ident);
  if (base.fitted_y.size() != y.values.size()) {
    throw Error("bootstrap_identify: base fit does not match y");
  }
  const int B = cfg.n_replicates_ident;
  const int horizon = std::max(1, cfg.kernel_band_horizon);

  BootstrapSummary s;
  s.scalar_names = {"alpha", "beta", "delay", "gain", "time_constant"};
  s.n_scalars = static_cast<int>(s.scalar_names.size());
  s.n_pointwise = horizon;
  s.percentiles = cfg.percentiles;
  s.n_requested = B;

  std::vector<Eigen::VectorXd> rows;
  rows.reserve(static_cast<size_t>(B));
  for (int i = 0; i < B; ++i) {
    std::mt19937_64 eng = substream(cfg.seed, kStreamIdent, static_cast<std::uint64_t>(i));
    DailySeries ys = y;
    ys.values = wild_resample(base.fitted_y, base.residuals, eng);
    try {
      const IdentResult r = identify(u, ys, icfg);
      Eigen::VectorXd row(s.n_scalars + s.n_pointwise);
      row(0) = r.kernel.alpha;
      row(1) = r.kernel.beta;
      row(2) = r.kernel.delay_days;
      row(3) = r.stats.gain_mu;
      row(4) = r.stats.time_constant_days;
      for (int t = 0; t < horizon; ++t) row(s.n_scalars + t) = kernel_eval(r.kernel, t);
      rows.push_back(std::move(row));
    } catch (const Error&) {
      ++s.n_failed;
    }
  }
  detail::check_failures(s.n_failed, s.n_requested);

  s.replicates.resize(static_cast<Eigen::Index>(rows.size()), s.n_scalars + s.n_pointwise);
  for (size_t r = 0; r < rows.size(); ++r) {
    s.replicates.row(static_cast<Eigen::Index>(r)) = rows[r];
  }
  detail::finalize_summary(s);
  return s;
}

/// Everything bootstrap_deconvolve needs to re-run one cohort's
/// reconstruction: the base kernel and the solver settings, with lambda held
/// at the base selection unless reselect_lambda asks for a per-replicate Cp.
struct DeconvTemplate {
  ExpKernel kernel;
  PenaltyKind penalty = PenaltyKind::second_difference;
  double lambda = 0.0;
  int L = 21;
  bool reselect_lambda = false;
  double sigma2 = 0.0;              // used only when reselect_lambda
  std::vector<double> lambda_grid;  // used only when reselect_lambda
};

/// Double wild bootstrap of the reconstruction: each replicate pairs one
/// kernel replicate (uniform draw from the identification bootstrap) with one
/// wild-resampled first-wave admission series. Pointwise bands are reported on
/// the index grid dated by the BASE kernel's delay; replicate delays shuffle
/// dates by a day or two and aligning on dates instead would misregister rows.
inline BootstrapSummary bootstrap_deconvolve(const DailySeries& first_wave_Y,
                                             const BootstrapSummary& second_wave_summary,
                                             const DeconvTemplate& tmpl,
                                             const BootstrapConfig& cfg) {
  detail::check_bootstrap_config(cfg, cfg.n_replicates_deconv);
  const int n_kernels = static_cast<int>(second_wave_summary.replicates.rows());
  if (n_kernels == 0) throw EmptyInput("bootstrap_deconvolve: no kernel replicates");
  const auto col_of = [&](const char* name) {
    for (size_t i = 0; i < second_wave_summary.scalar_names.size(); ++i) {
      if (second_wave_summary.scalar_names[i] == name) return static_cast<int>(i);
    }
    throw Error(std::string("bootstrap_deconvolve: summary lacks scalar ") + name);
  };
  const int c_alpha = col_of("alpha");
  const int c_beta = col_of("beta");
  const int c_delay = col_of("delay");

  const DeconvSolution base =
      reconstruct_cohort(first_wave_Y, tmpl.kernel, tmpl.penalty, tmpl.lambda, tmpl.L);
  const int n = static_cast<int>(first_wave_Y.size());
  const int m = n + tmpl.L + 1;
  std::vector<double> y_hat(static_cast<size_t>(n));
  std::vector<double> res(static_cast<size_t>(n));
  for (int t = 0; t < n; ++t) {
    res[static_cast<size_t>(t)] = base.residuals(t);
    y_hat[static_cast<size_t>(t)] = first_wave_Y.values[static_cast<size_t>(t)] - res[static_cast<size_t>(t)];
  }

  const int B = cfg.n_replicates_deconv;
  BootstrapSummary s;
  s.scalar_names = {"total"};
  s.n_scalars = 1;
  s.n_pointwise = m;
  s.percentiles = cfg.percentiles;
  s.n_requested = B;
  s.pointwise_start = base.start_date;

  std::vector<Eigen::VectorXd> rows;
  rows.reserve(static_cast<size_t>(B));
  std::uniform_int_distribution<int> pick(0, n_kernels - 1);
  for (int i = 0; i < B; ++i) {
    std::mt19937_64 eng = substream(cfg.seed, kStreamDeconv, static_cast<std::uint64_t>(i));
    const int k = pick(eng);
    ExpKernel kr;
    kr.alpha = second_wave_summary.replicates(k, c_alpha);
    kr.beta = second_wave_summary.replicates(k, c_beta);
    kr.delay_days = static_cast<int>(std::llround(second_wave_summary.replicates(k, c_delay)));
    const std::vector<double> ystar = wild_resample(y_hat, res, eng);
    try {
      DeconvProblem p;
      p.Y = Eigen::Map<const Eigen::VectorXd>(ystar.data(), n);
      p.spec = make_conv_spec(kr, n, tmpl.L);
      p.penalty = tmpl.penalty;
      p.lambda = tmpl.lambda;
      p.compute_dof = false;
      if (tmpl.reselect_lambda) {
        p.lambda = mallows_cp(p, tmpl.lambda_grid, tmpl.sigma2).selected_lambda;
      }
      const DeconvSolution sol = solve(p);
      Eigen::VectorXd row(1 + m);
      row(0) = sol.C.sum();
      row.tail(m) = sol.C;
      rows.push_back(std::move(row));
    } catch (const Error&) {
      ++s.n_failed;
    }
  }
  detail::check_failures(s.n_failed, s.n_requested);

  s.replicates.resize(static_cast<Eigen::Index>(rows.size()), 1 + m);
  for (size_t r = 0; r < rows.size(); ++r) {
    s.replicates.row(static_cast<Eigen::Index>(r)) = rows[r];
  }
  detail::finalize_summary(s);
  return s;
}

}  // namespace retrocast

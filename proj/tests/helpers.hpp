#pragma once

// Shared generators and independent reference implementations ("oracles") used
// to cross-check the production solvers. The oracles deliberately use
// different algorithms than the library: direct summation instead of the AR(1)
// recurrence, dense QR on the stacked system instead of normal equations,
// exhaustive active-set enumeration instead of Lawson-Hanson, and a Big-M
// Bland-rule simplex instead of the two-phase solver.

#include <unistd.h>

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <retrocast/retrocast.hpp>

namespace testhelp {

using retrocast::DailySeries;
using retrocast::Date;
using retrocast::ExpKernel;

// ---------------------------------------------------------------------------
// generators
// ---------------------------------------------------------------------------

/// Two-phase rise/decay curve: logistic ramp into an exponential decay, the
/// wave shape used by the identification round-trip criteria.
inline DailySeries wave_input(int n = 120, Date start = retrocast::make_date(2020, 10, 1),
                              double peak = 1000.0) {
  DailySeries s;
  s.start = start;
  s.quantity = retrocast::Quantity::new_cases;
  s.values.resize(static_cast<size_t>(n));
  const double t_rise = n * 0.35;
  for (int t = 0; t < n; ++t) {
    const double rise = 1.0 / (1.0 + std::exp(-(t - t_rise) / (n * 0.06)));
    const double decay = std::exp(-std::max(0.0, t - n * 0.55) / (n * 0.18));
    s.values[static_cast<size_t>(t)] = peak * rise * decay;
  }
  return s;
}

/// Smooth nonnegative bump (raised cosine) used as deconvolution ground truth.
inline std::vector<double> smooth_bump(int m, double peak = 500.0, double center_frac = 0.5,
                                       double width_frac = 0.6) {
  std::vector<double> c(static_cast<size_t>(m), 0.0);
  const double center = m * center_frac;
  const double half = m * width_frac / 2.0;
  for (int i = 0; i < m; ++i) {
    const double z = (i - center) / half;
    if (std::abs(z) < 1.0) c[static_cast<size_t>(i)] = peak * 0.5 * (1.0 + std::cos(M_PI * z));
  }
  return c;
}

// ---------------------------------------------------------------------------
// oracles
// ---------------------------------------------------------------------------

/// O(n*T) direct-summation convolution: y_t = sum_j g_j u_{t-j-D}, truncating
/// at relative tail mass 1e-15. Independent of the production recurrence.
inline std::vector<double> convolve_direct(const std::vector<double>& u, const ExpKernel& k) {
  const int n = static_cast<int>(u.size());
  int trunc = n + 1;
  if (k.alpha > 0.0) {
    trunc = std::max(trunc, static_cast<int>(std::ceil(std::log(1e-15) / std::log(k.alpha))) + 1);
  }
  std::vector<double> y(u.size(), 0.0);
  for (int t = 0; t < n; ++t) {
    double acc = 0.0;
    for (int j = 0; j <= trunc; ++j) {
      const int idx = t - j - k.delay_days;
      if (idx < 0 || idx >= n) continue;
      acc += retrocast::kernel_eval(k, j) * u[static_cast<size_t>(idx)];
    }
    y[static_cast<size_t>(t)] = acc;
  }
  return y;
}

/// Stacked least-squares oracle: min |Y - GC|^2 + lambda |PC|^2 solved as one
/// dense QR on [[G],[sqrt(lambda) P]].
inline Eigen::VectorXd augmented_lsq(const Eigen::MatrixXd& G, const Eigen::MatrixXd& P,
                                     const Eigen::VectorXd& Y, double lambda) {
  Eigen::MatrixXd A(G.rows() + P.rows(), G.cols());
  A.topRows(G.rows()) = G;
  A.bottomRows(P.rows()) = std::sqrt(lambda) * P;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(A.rows());
  rhs.head(G.rows()) = Y;
  return A.colPivHouseholderQr().solve(rhs);
}

/// Brute-force nonnegative QP oracle: enumerate all 2^m candidate active sets,
/// solve the equality-constrained system on the free set, keep the feasible
/// candidate with the smallest objective 1/2 x'Mx - q'x.
inline Eigen::VectorXd nnls_bruteforce(const Eigen::MatrixXd& M, const Eigen::VectorXd& q) {
  const int m = static_cast<int>(M.rows());
  Eigen::VectorXd best = Eigen::VectorXd::Zero(m);
  double best_obj = 0.0;  // objective of x = 0
  for (std::uint32_t mask = 1; mask < (1u << m); ++mask) {
    std::vector<int> free_idx;
    for (int j = 0; j < m; ++j) {
      if (mask & (1u << j)) free_idx.push_back(j);
    }
    const int p = static_cast<int>(free_idx.size());
    Eigen::MatrixXd Mff(p, p);
    Eigen::VectorXd qf(p);
    for (int r = 0; r < p; ++r) {
      qf(r) = q(free_idx[static_cast<size_t>(r)]);
      for (int c = 0; c < p; ++c) {
        Mff(r, c) = M(free_idx[static_cast<size_t>(r)], free_idx[static_cast<size_t>(c)]);
      }
    }
    const Eigen::VectorXd xf = Mff.ldlt().solve(qf);
    if (!xf.allFinite() || xf.minCoeff() < 0.0) continue;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(m);
    for (int r = 0; r < p; ++r) x(free_idx[static_cast<size_t>(r)]) = xf(r);
    const double obj = 0.5 * x.dot(M * x) - q.dot(x);
    if (obj < best_obj) {
      best_obj = obj;
      best = x;
    }
  }
  return best;
}

/// Independent LP oracle: single-phase Big-M dense simplex with Bland's rule
/// throughout. Returns the optimal objective of min c'x, A x {rel} b, x >= 0.
inline double lp_oracle_objective(const retrocast::LinearProgram& lp) {
  using retrocast::Relation;
  Eigen::MatrixXd A = lp.A;
  Eigen::VectorXd b = lp.b;
  std::vector<Relation> rel = lp.rel;
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());
  for (int i = 0; i < m; ++i) {
    if (b(i) < 0.0) {
      A.row(i) = -A.row(i);
      b(i) = -b(i);
      if (rel[static_cast<size_t>(i)] == Relation::le) {
        rel[static_cast<size_t>(i)] = Relation::ge;
      } else if (rel[static_cast<size_t>(i)] == Relation::ge) {
        rel[static_cast<size_t>(i)] = Relation::le;
      }
    }
  }
  int n_slack = 0, n_art = 0;
  for (Relation r : rel) {
    if (r != Relation::eq) ++n_slack;
    if (r != Relation::le) ++n_art;
  }
  const int cols = n + n_slack + n_art;
  // large relative to the cost scale, small enough that z-row rounding noise
  // (~ big_m * eps * pivots) stays far below the pivot tolerance
  const double big_m = 1e5 * std::max(1.0, lp.c.cwiseAbs().maxCoeff());

  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, cols + 1);
  T.block(0, 0, m, n) = A;
  T.col(cols) = b;
  Eigen::VectorXd cost = Eigen::VectorXd::Zero(cols);
  cost.head(n) = lp.c;
  std::vector<int> basis(static_cast<size_t>(m));
  int slack = n, art = n + n_slack;
  for (int i = 0; i < m; ++i) {
    switch (rel[static_cast<size_t>(i)]) {
      case Relation::le:
        T(i, slack) = 1.0;
        basis[static_cast<size_t>(i)] = slack++;
        break;
      case Relation::ge:
        T(i, slack) = -1.0;
        ++slack;
        T(i, art) = 1.0;
        cost(art) = big_m;
        basis[static_cast<size_t>(i)] = art++;
        break;
      case Relation::eq:
        T(i, art) = 1.0;
        cost(art) = big_m;
        basis[static_cast<size_t>(i)] = art++;
        break;
    }
  }

  Eigen::RowVectorXd z = Eigen::RowVectorXd::Zero(cols + 1);
  z.head(cols) = cost.transpose();
  for (int i = 0; i < m; ++i) {
    if (cost(basis[static_cast<size_t>(i)]) != 0.0) z -= cost(basis[static_cast<size_t>(i)]) * T.row(i);
  }

  const double tol = 1e-6 * std::max(1.0, lp.c.cwiseAbs().maxCoeff());
  for (int iter = 0; iter < 100000; ++iter) {
    int enter = -1;
    for (int j = 0; j < cols; ++j) {  // Bland: first improving column
      if (z(j) < -tol) {
        enter = j;
        break;
      }
    }
    if (enter < 0) break;
    int leave = -1;
    double best_ratio = 0.0;
    for (int i = 0; i < m; ++i) {
      if (T(i, enter) <= 1e-11) continue;
      const double ratio = T(i, cols) / T(i, enter);
      if (leave < 0 || ratio < best_ratio ||
          (ratio == best_ratio &&
           basis[static_cast<size_t>(i)] < basis[static_cast<size_t>(leave)])) {
        leave = i;
        best_ratio = ratio;
      }
    }
    if (leave < 0) throw retrocast::Unbounded("lp oracle: unbounded");
    T.row(leave) /= T(leave, enter);
    for (int i = 0; i < m; ++i) {
      if (i != leave && T(i, enter) != 0.0) T.row(i) -= T(i, enter) * T.row(leave);
    }
    if (z(enter) != 0.0) z -= z(enter) * T.row(leave);
    basis[static_cast<size_t>(leave)] = enter;
  }

  double obj = 0.0;
  for (int i = 0; i < m; ++i) {
    const int bi = basis[static_cast<size_t>(i)];
    if (bi < n) obj += lp.c(bi) * T(i, cols);
    if (cost(bi) >= big_m && T(i, cols) > 1e-6) {
      throw retrocast::Error("lp oracle: infeasible (artificial stayed basic)");
    }
  }
  return obj;
}

// ---------------------------------------------------------------------------
// filesystem scratch space
// ---------------------------------------------------------------------------

struct TempDir {
  std::filesystem::path path;

  TempDir() {
    static std::atomic<int> counter{0};
    path = std::filesystem::temp_directory_path() /
           ("retrocast_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

// ---------------------------------------------------------------------------
// synthetic multi-cohort scenario
// ---------------------------------------------------------------------------

/// Raised-cosine pulse: peak at offset 0, support (-half_width, half_width).
inline double raised_cosine(int offset, int half_width, double peak) {
  if (std::abs(offset) >= half_width) return 0.0;
  const double x = 3.14159265358979323846 * offset / half_width;
  return 0.5 * peak * (1.0 + std::cos(x));
}

/// Ground truth behind one generated cohort; what a perfect run recovers.
struct SyntheticCohort {
  std::string label;
  retrocast::ExpKernel kernel;
  double report_factor = 1.0;  // first-wave official = truth / report_factor
  long long population = 0;
  std::vector<double> true_cases;  // on the full date range
};

struct SyntheticScenario {
  retrocast::Date start{};
  int n_days = 0;
  retrocast::Date era_boundary{};  // official == truth from this date onward
  std::vector<SyntheticCohort> cohorts;

  double true_at(int cohort, retrocast::Date d) const {
    const int i = d - start;
    if (i < 0 || i >= n_days) return 0.0;
    return cohorts[static_cast<size_t>(cohort)].true_cases[static_cast<size_t>(i)];
  }
};

/// Two-wave scenario on 2019-12-01 .. 2020-12-31: a smooth spring bump that
/// the official counts under-report by a per-cohort factor, and a fully
/// reported autumn bump. Admissions are the kernel response to the true
/// cases, so deconvolving the spring window should recover the spring bump.
/// `zero_first_wave` empties the spring bump of one cohort (negative: none).
inline SyntheticScenario make_synthetic_scenario(int zero_first_wave = -1) {
  SyntheticScenario sc;
  sc.start = retrocast::make_date(2019, 12, 1);
  sc.n_days = retrocast::make_date(2020, 12, 31) - sc.start + 1;
  sc.era_boundary = retrocast::make_date(2020, 6, 1);
  const auto& labels = retrocast::cohort_labels();
  const int spring_peak = retrocast::make_date(2020, 3, 15) - sc.start;
  const int autumn_peak = retrocast::make_date(2020, 11, 5) - sc.start;
  for (int c = 0; c < 10; ++c) {
    SyntheticCohort coh;
    coh.label = labels[static_cast<size_t>(c)];
    coh.kernel.alpha = 0.78 + 0.015 * c;
    coh.kernel.delay_days = -5 - (c % 6);
    const double mu = 0.01 + 0.02 * c;  // admission fraction 1% .. 19%
    coh.kernel.beta = mu * (1.0 - coh.kernel.alpha);
    coh.report_factor = 3.5 + 0.5 * c;
    coh.population = 4500000LL + 220000LL * c;
    const double a1 = (c == zero_first_wave) ? 0.0 : 800.0 + 250.0 * c;
    const double a2 = 600.0 + 180.0 * c;
    coh.true_cases.assign(static_cast<size_t>(sc.n_days), 0.0);
    for (int t = 0; t < sc.n_days; ++t) {
      coh.true_cases[static_cast<size_t>(t)] =
          raised_cosine(t - spring_peak, 55, a1) + raised_cosine(t - autumn_peak, 50, a2);
    }
    sc.cohorts.push_back(std::move(coh));
  }
  return sc;
}

/// Materializes the scenario as the CSV pair the pipeline consumes. Official
/// cases are truth scaled down before the era boundary; admissions get
/// optional clipped Gaussian noise scaled to their per-cohort peak.
inline void write_synthetic_csvs(const SyntheticScenario& sc,
                                 const std::filesystem::path& data_csv,
                                 const std::filesystem::path& pop_csv,
                                 double noise_frac = 0.0, std::uint64_t seed = 0) {
  retrocast::CohortDataset ds;
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int era_split = sc.era_boundary - sc.start;
  for (const auto& coh : sc.cohorts) {
    DailySeries truth;
    truth.start = sc.start;
    truth.cohort = coh.label;
    truth.quantity = retrocast::Quantity::new_cases;
    truth.values = coh.true_cases;

    DailySeries official = truth;
    for (int t = 0; t < era_split && t < static_cast<int>(official.values.size()); ++t) {
      official.values[static_cast<size_t>(t)] /= coh.report_factor;
    }

    DailySeries admissions = retrocast::convolve(truth, coh.kernel);
    admissions.quantity = retrocast::Quantity::hospital_admissions;
    if (noise_frac > 0.0) {
      double peak = 0.0;
      for (double v : admissions.values) peak = std::max(peak, v);
      const double sd = noise_frac * peak;
      for (double& v : admissions.values) v = std::max(0.0, v + sd * normal(gen));
    }

    ds.cohorts.push_back({coh.label, coh.population});
    ds.series.emplace(retrocast::SeriesKey{coh.label, retrocast::Quantity::new_cases},
                      std::move(official));
    ds.series.emplace(retrocast::SeriesKey{coh.label, retrocast::Quantity::hospital_admissions},
                      std::move(admissions));
  }
  retrocast::save_csv(ds, data_csv.string());

  std::ofstream pop(pop_csv);
  pop << "age_group,population\n";
  for (const auto& coh : sc.cohorts) pop << coh.label << ',' << coh.population << '\n';
}

}  // namespace testhelp

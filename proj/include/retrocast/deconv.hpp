#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "retrocast/conv_matrix.hpp"
#include "retrocast/errors.hpp"
#include "retrocast/nnls.hpp"
#include "retrocast/penalty.hpp"
#include "retrocast/series.hpp"
#include "retrocast/simplex.hpp"

namespace retrocast {

enum class DeconvLoss { quadratic, l1 };
enum class SolverKind { closed_form, qp_active_set, lp };

inline const char* to_string(SolverKind s) {
  switch (s) {
    case SolverKind::closed_form: return "closed_form";
    case SolverKind::qp_active_set: return "qp_active_set";
    case SolverKind::lp: return "lp";
  }
  return "?";
}

struct DeconvProblem {
  Eigen::VectorXd Y;                                    // observed outputs, length n
  ConvMatrixSpec spec;                                  // kernel, n, L
  PenaltyKind penalty = PenaltyKind::second_difference;
  double lambda = 0.0;
  DeconvLoss loss = DeconvLoss::quadratic;
  bool nonneg = true;
  bool compute_dof = true;  // hat-matrix trace is O(m^3); bootstrap turns it off
};

struct DeconvSolution {
  Eigen::VectorXd C;          // reconstructed inputs, length n+L+1 (pre-window first)
  Eigen::VectorXd residuals;  // Y - G*C
  double rss = 0.0;
  double penalty_value = 0.0;  // lambda*|PC|^2 (quadratic) or sum d_t (l1)
  double dof = std::numeric_limits<double>::quiet_NaN();
  std::vector<int> active_set;  // coordinates pinned at zero
  SolverKind solver = SolverKind::closed_form;
  std::optional<Date> start_date;  // attached by reconstruct_cohort
};

namespace detail {

struct NormalSystem {
  Eigen::MatrixXd G;
  Eigen::MatrixXd P;
  Eigen::MatrixXd M;  // G'G + lambda P'P
  Eigen::VectorXd q;  // G'Y
};

inline void check_problem(const DeconvProblem& p) {
  if (!p.Y.allFinite()) throw NonFiniteInput("deconv: Y contains non-finite values");
  if (p.Y.size() != p.spec.n_obs) throw Error("deconv: Y length disagrees with spec.n_obs");
  if (!(p.lambda >= 0.0) || !std::isfinite(p.lambda)) {
    throw Error("deconv: lambda must be finite and >= 0");
  }
}

inline NormalSystem build_normal_system(const DeconvProblem& p) {
  NormalSystem s;
  s.G = build_conv_matrix(p.spec);
  s.P = penalty_matrix(p.penalty, p.spec.n_unknowns());
  s.M = s.G.transpose() * s.G + p.lambda * (s.P.transpose() * s.P);
  s.q = s.G.transpose() * p.Y;
  return s;
}

// trace of the hat matrix G (G'G + lambda P'P)^{-1} G', computed on an index
// subset (the passive set for constrained fits; all columns otherwise)
inline double hat_trace(const Eigen::MatrixXd& G, const Eigen::MatrixXd& M,
                        const std::vector<int>* subset = nullptr) {
  if (subset == nullptr) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
    const Eigen::MatrixXd X = ldlt.solve(G.transpose() * G);
    if (!X.allFinite()) throw SingularSystem("deconv: degrees of freedom undefined");
    return X.trace();
  }
  const int p = static_cast<int>(subset->size());
  if (p == 0) return 0.0;
  Eigen::MatrixXd Gp(G.rows(), p);
  Eigen::MatrixXd Mpp(p, p);
  for (int r = 0; r < p; ++r) {
    Gp.col(r) = G.col((*subset)[static_cast<size_t>(r)]);
    for (int c = 0; c < p; ++c) {
      Mpp(r, c) = M((*subset)[static_cast<size_t>(r)], (*subset)[static_cast<size_t>(c)]);
    }
  }
  const Eigen::MatrixXd X = Mpp.ldlt().solve(Gp.transpose() * Gp);
  if (!X.allFinite()) throw SingularSystem("deconv: degrees of freedom undefined");
  return X.trace();
}

inline void fill_quadratic_diagnostics(const DeconvProblem& p, const NormalSystem& s,
                                       DeconvSolution& sol) {
  sol.residuals = p.Y - s.G * sol.C;
  sol.rss = sol.residuals.squaredNorm();
  sol.penalty_value = p.lambda * (s.P * sol.C).squaredNorm();
}

}  // namespace detail

/// C = (G'G + lambda P'P)^{-1} G'Y. Nonnegativity is NOT enforced here.
inline DeconvSolution solve_quadratic_closed_form(const DeconvProblem& p) {
  detail::check_problem(p);
  if (p.loss != DeconvLoss::quadratic) throw Error("closed form requires quadratic loss");
  if (p.lambda == 0.0 && p.spec.pre_window_L >= 0) {
    throw SingularSystem("deconv: lambda=0 with pre-window unknowns is underdetermined");
  }
  const auto s = detail::build_normal_system(p);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(s.M);
  DeconvSolution sol;
  sol.C = ldlt.solve(s.q);
  const double lhs_scale = s.M.cwiseAbs().maxCoeff() * sol.C.cwiseAbs().maxCoeff();
  const double rhs_scale = s.q.size() ? s.q.cwiseAbs().maxCoeff() : 0.0;
  if (!sol.C.allFinite() ||
      (s.M * sol.C - s.q).cwiseAbs().maxCoeff() > 1e-8 * std::max({lhs_scale, rhs_scale, 1e-300})) {
    throw SingularSystem("deconv: normal equations are singular or ill-conditioned");
  }
  sol.solver = SolverKind::closed_form;
  if (p.compute_dof) sol.dof = detail::hat_trace(s.G, s.M);
  detail::fill_quadratic_diagnostics(p, s, sol);
  return sol;
}

/// min |Y-GC|^2 + lambda |PC|^2  s.t.  C >= 0, via active-set NNLS in Gram form.
inline DeconvSolution solve_qp_nonneg(const DeconvProblem& p,
                                      std::vector<int> warm_start_passive = {}) {
  detail::check_problem(p);
  if (p.loss != DeconvLoss::quadratic) throw Error("QP route requires quadratic loss");
  const auto s = detail::build_normal_system(p);
  const NnlsResult r = nnls_gram(s.M, s.q, std::move(warm_start_passive));
  DeconvSolution sol;
  sol.C = r.x;
  sol.active_set = r.active;
  sol.solver = SolverKind::qp_active_set;
  std::vector<int> passive;
  std::vector<bool> is_active(static_cast<size_t>(sol.C.size()), false);
  for (int j : r.active) is_active[static_cast<size_t>(j)] = true;
  for (int j = 0; j < sol.C.size(); ++j) {
    if (!is_active[static_cast<size_t>(j)]) passive.push_back(j);
  }
  if (p.compute_dof) sol.dof = detail::hat_trace(s.G, s.M, &passive);
  detail::fill_quadratic_diagnostics(p, s, sol);
  return sol;
}

/// L1 route: min sum(b) + sum(d)  s.t.
///   G c + b >= Y,  -G c + b >= -Y,   (b_t >= |y_t - (Gc)_t| split)
///   d - lambda P c >= 0,  d + lambda P c >= 0,  c,b,d >= 0.
inline DeconvSolution solve_lp(const DeconvProblem& p) {
  detail::check_problem(p);
  if (p.loss != DeconvLoss::l1) throw Error("LP route requires l1 loss");
  const int n = p.spec.n_obs;
  const int m = p.spec.n_unknowns();
  const Eigen::MatrixXd G = build_conv_matrix(p.spec);
  const Eigen::MatrixXd P = penalty_matrix(p.penalty, m);

  LinearProgram lp;
  const int nv = m + n + m;  // [c, b, d]
  lp.A = Eigen::MatrixXd::Zero(2 * n + 2 * m, nv);
  lp.b = Eigen::VectorXd::Zero(2 * n + 2 * m);
  lp.c = Eigen::VectorXd::Zero(nv);
  lp.c.segment(m, n).setOnes();
  lp.c.tail(m).setOnes();
  lp.rel.assign(static_cast<size_t>(2 * n + 2 * m), Relation::ge);

  lp.A.block(0, 0, n, m) = G;
  lp.A.block(0, m, n, n).setIdentity();
  lp.b.head(n) = p.Y;
  lp.A.block(n, 0, n, m) = -G;
  lp.A.block(n, m, n, n).setIdentity();
  lp.b.segment(n, n) = -p.Y;
  lp.A.block(2 * n, 0, m, m) = -p.lambda * P;
  lp.A.block(2 * n, m + n, m, m).setIdentity();
  lp.A.block(2 * n + m, 0, m, m) = p.lambda * P;
  lp.A.block(2 * n + m, m + n, m, m).setIdentity();

  const LpSolution lps = solve_lp_simplex(lp);

  DeconvSolution sol;
  // basic-variable extraction can leave -1e-17-scale dust on a bound that is
  // exactly active; clamp so the published invariant C >= 0 holds verbatim
  sol.C = lps.x.head(m).cwiseMax(0.0);
  sol.solver = SolverKind::lp;
  sol.residuals = p.Y - G * sol.C;
  sol.rss = sol.residuals.squaredNorm();
  sol.penalty_value = lps.x.tail(m).sum();
  for (int j = 0; j < m; ++j) {
    if (sol.C(j) == 0.0) sol.active_set.push_back(j);
  }
  return sol;
}

/// Paper policy dispatcher: l1 loss goes to the LP; quadratic loss is solved in
/// closed form first, and re-solved as a constrained QP only when the
/// unconstrained solution violates nonnegativity.
inline DeconvSolution solve(const DeconvProblem& p) {
  if (p.loss == DeconvLoss::l1) return solve_lp(p);
  DeconvSolution sol = solve_quadratic_closed_form(p);
  if (p.nonneg && sol.C.size() > 0 && sol.C.minCoeff() < 0.0) {
    sol = solve_qp_nonneg(p);
  }
  return sol;
}

/// End-to-end reconstruction of one cohort's first-wave inputs from its
/// admissions, reusing the second-wave kernel. Dates are attached so that
/// C[0] (the earliest pre-window unknown) falls L+1 days before the window
/// start, shifted by the identified delay.
inline DeconvSolution reconstruct_cohort(const DailySeries& first_wave_Y, const ExpKernel& kernel,
                                         PenaltyKind penalty, double lambda, int L) {
  validate_counts(first_wave_Y);
  DeconvProblem p;
  p.Y = Eigen::Map<const Eigen::VectorXd>(first_wave_Y.values.data(),
                                          static_cast<Eigen::Index>(first_wave_Y.values.size()));
  p.spec = make_conv_spec(kernel, static_cast<int>(first_wave_Y.size()), L);
  p.penalty = penalty;
  p.lambda = lambda;
  DeconvSolution sol = solve(p);
  sol.start_date = first_wave_Y.start + (-(L + 1) - kernel.delay_days);
  return sol;
}

}  // namespace retrocast

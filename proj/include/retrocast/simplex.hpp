#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "retrocast/errors.hpp"

namespace retrocast {

enum class Relation { le, eq, ge };

/// min c'x  s.t.  A x {<=,=,>=} b  (row-wise per rel),  x >= 0
struct LinearProgram {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::VectorXd c;
  std::vector<Relation> rel;
};

struct LpSolution {
  Eigen::VectorXd x;
  double objective = 0.0;
  int iterations = 0;
};

namespace detail {

// Dense two-phase tableau simplex. Dantzig pricing with a permanent switch to
// Bland's rule once a streak of degenerate pivots suggests cycling.
class SimplexTableau {
 public:
  SimplexTableau(const LinearProgram& lp, int max_iterations)
      : n_(static_cast<int>(lp.c.size())), max_iterations_(max_iterations) {
    const int m = static_cast<int>(lp.A.rows());
    if (lp.A.cols() != n_ || lp.b.size() != m || static_cast<int>(lp.rel.size()) != m) {
      throw Error("solve_lp_simplex: dimension mismatch");
    }
    if (!lp.A.allFinite() || !lp.b.allFinite() || !lp.c.allFinite()) {
      throw NonFiniteInput("solve_lp_simplex: non-finite program data");
    }

    // Normalize every row to b >= 0, then: <= rows get a slack that can start
    // basic; = and >= rows need an artificial.
    Eigen::MatrixXd A = lp.A;
    Eigen::VectorXd b = lp.b;
    std::vector<Relation> rel = lp.rel;
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

    int n_slack = 0;
    int n_art = 0;
    for (Relation r : rel) {
      if (r != Relation::eq) ++n_slack;
      if (r != Relation::le) ++n_art;
    }
    art_begin_ = n_ + n_slack;
    const int cols = n_ + n_slack + n_art;

    T_ = Eigen::MatrixXd::Zero(m, cols + 1);
    T_.block(0, 0, m, n_) = A;
    T_.col(cols) = b;
    basis_.assign(static_cast<size_t>(m), -1);
    int slack = n_;
    int art = art_begin_;
    for (int i = 0; i < m; ++i) {
      switch (rel[static_cast<size_t>(i)]) {
        case Relation::le:
          T_(i, slack) = 1.0;
          basis_[static_cast<size_t>(i)] = slack++;
          break;
        case Relation::ge:
          T_(i, slack) = -1.0;
          ++slack;
          T_(i, art) = 1.0;
          basis_[static_cast<size_t>(i)] = art++;
          break;
        case Relation::eq:
          T_(i, art) = 1.0;
          basis_[static_cast<size_t>(i)] = art++;
          break;
      }
    }

    cost_ = Eigen::VectorXd::Zero(cols);
    cost_.head(n_) = lp.c;
    const double data_scale =
        std::max({1.0, A.cwiseAbs().maxCoeff(), b.size() ? b.cwiseAbs().maxCoeff() : 0.0});
    pivot_tol_ = 1e-10 * data_scale;
    cost_tol_ = 1e-9 * std::max(1.0, lp.c.cwiseAbs().maxCoeff());
  }

  LpSolution solve() {
    const int m = static_cast<int>(T_.rows());
    const int cols = static_cast<int>(T_.cols()) - 1;

    if (art_begin_ < cols) {
      // phase 1: z-row = reduced costs of sum-of-artificials objective
      Eigen::RowVectorXd z = Eigen::RowVectorXd::Zero(cols + 1);
      for (int j = art_begin_; j < cols; ++j) z(j) = 1.0;
      for (int i = 0; i < m; ++i) {
        if (basis_[static_cast<size_t>(i)] >= art_begin_) z -= T_.row(i);
      }
      run_phase(z, /*phase1=*/true);
      if (z(cols) < -1e-7 * std::max(1.0, T_.col(cols).cwiseAbs().maxCoeff())) {
        throw Error("solve_lp_simplex: problem is infeasible");
      }
      // drive surviving artificials out of the basis where possible
      for (int i = 0; i < m; ++i) {
        if (basis_[static_cast<size_t>(i)] < art_begin_) continue;
        int enter = -1;
        for (int j = 0; j < art_begin_; ++j) {
          if (std::abs(T_(i, j)) > pivot_tol_) {
            enter = j;
            break;
          }
        }
        if (enter >= 0) pivot(i, enter, z);
        // else: redundant row; its artificial stays basic at zero, harmless
        // because artificial columns are barred from entering in phase 2
      }
    }

    // phase 2: rebuild the z-row from the real objective
    Eigen::RowVectorXd z = Eigen::RowVectorXd::Zero(cols + 1);
    z.head(cols) = cost_.transpose();
    for (int i = 0; i < m; ++i) {
      const int bi = basis_[static_cast<size_t>(i)];
      if (std::abs(cost_(bi)) > 0.0) z -= cost_(bi) * T_.row(i);
    }
    run_phase(z, /*phase1=*/false);

    LpSolution sol;
    sol.x = Eigen::VectorXd::Zero(n_);
    for (int i = 0; i < m; ++i) {
      const int bi = basis_[static_cast<size_t>(i)];
      if (bi < n_) sol.x(bi) = T_(i, cols);
    }
    sol.objective = cost_.head(n_).dot(sol.x);
    sol.iterations = iterations_;
    return sol;
  }

 private:
  void run_phase(Eigen::RowVectorXd& z, bool phase1) {
    const int m = static_cast<int>(T_.rows());
    const int cols = static_cast<int>(T_.cols()) - 1;
    const int enter_end = art_begin_;  // artificial columns never (re-)enter
    while (true) {
      if (++iterations_ > max_iterations_) {
        throw MaxIterations("simplex exceeded " + std::to_string(max_iterations_) +
                            " iterations");
      }
      int enter = -1;
      if (!bland_) {
        double best = -cost_tol_;
        for (int j = 0; j < enter_end; ++j) {
          if (z(j) < best) {
            best = z(j);
            enter = j;
          }
        }
      } else {
        for (int j = 0; j < enter_end; ++j) {
          if (z(j) < -cost_tol_) {
            enter = j;
            break;
          }
        }
      }
      if (enter < 0) return;  // optimal for this phase

      int leave = -1;
      double best_ratio = 0.0;
      for (int i = 0; i < m; ++i) {
        const double a = T_(i, enter);
        if (a <= pivot_tol_) continue;
        const double ratio = T_(i, cols) / a;
        if (leave < 0 || ratio < best_ratio - 1e-12 * (1.0 + std::abs(best_ratio))) {
          leave = i;
          best_ratio = ratio;
        } else if (ratio <= best_ratio + 1e-12 * (1.0 + std::abs(best_ratio))) {
          // tie break: Bland wants the smallest basic index, Dantzig mode
          // prefers the numerically larger pivot
          if (bland_ ? basis_[static_cast<size_t>(i)] < basis_[static_cast<size_t>(leave)]
                     : a > T_(leave, enter)) {
            leave = i;
            best_ratio = std::min(best_ratio, ratio);
          }
        }
      }
      if (leave < 0) {
        if (phase1) throw Error("solve_lp_simplex: phase 1 unbounded");
        throw Unbounded("solve_lp_simplex: objective is unbounded below");
      }

      if (T_(leave, cols) <= pivot_tol_) {
        if (++degenerate_streak_ >= 40) bland_ = true;
      } else {
        degenerate_streak_ = 0;
      }
      pivot(leave, enter, z);
    }
  }

  void pivot(int row, int col, Eigen::RowVectorXd& z) {
    const int m = static_cast<int>(T_.rows());
    T_.row(row) /= T_(row, col);
    for (int i = 0; i < m; ++i) {
      if (i == row) continue;
      const double f = T_(i, col);
      if (f != 0.0) T_.row(i) -= f * T_.row(row);
    }
    const double fz = z(col);
    if (fz != 0.0) z -= fz * T_.row(row);
    basis_[static_cast<size_t>(row)] = col;
  }

  Eigen::MatrixXd T_;
  Eigen::VectorXd cost_;
  std::vector<int> basis_;
  int n_ = 0;
  int art_begin_ = 0;
  int max_iterations_ = 0;
  int iterations_ = 0;
  int degenerate_streak_ = 0;
  bool bland_ = false;
  double pivot_tol_ = 1e-10;
  double cost_tol_ = 1e-9;
};

}  // namespace detail

inline LpSolution solve_lp_simplex(const LinearProgram& lp, int max_iterations = 0) {
  if (max_iterations <= 0) {
    max_iterations = 200 * static_cast<int>(lp.A.rows() + lp.A.cols()) + 1000;
  }
  detail::SimplexTableau tableau(lp, max_iterations);
  return tableau.solve();
}

}  // namespace retrocast

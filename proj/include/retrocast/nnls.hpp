#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <vector>

#include "retrocast/errors.hpp"

namespace retrocast {

struct NnlsResult {
  Eigen::VectorXd x;
  std::vector<int> active;  // indices held at zero in the final solution
  int iterations = 0;
};

/// Lawson-Hanson active-set solver in Gram form: minimizes
/// 1/2 x' M x - q' x subject to x >= 0, where M = A'A and q = A'b of the
/// underlying stacked least-squares problem. M must be positive definite.
///
/// An optional warm-start passive set is accepted; infeasible warm-start
/// coordinates are pruned by the usual feasibility loop before any dual
/// check, so the result is the same KKT point the cold start reaches.
inline NnlsResult nnls_gram(const Eigen::MatrixXd& M, const Eigen::VectorXd& q,
                            std::vector<int> warm_start_passive = {},
                            int max_iterations = 0) {
  const int m = static_cast<int>(M.rows());
  if (M.cols() != m || q.size() != m) throw Error("nnls_gram: dimension mismatch");
  if (max_iterations <= 0) max_iterations = 10 * m + 100;

  std::vector<bool> passive(static_cast<size_t>(m), false);
  std::vector<bool> banned(static_cast<size_t>(m), false);
  for (int j : warm_start_passive) {
    if (j < 0 || j >= m) throw Error("nnls_gram: warm start index out of range");
    passive[static_cast<size_t>(j)] = true;
  }

  Eigen::VectorXd x = Eigen::VectorXd::Zero(m);
  const double scale = std::max(q.cwiseAbs().maxCoeff(), 1e-300);
  const double dual_tol = 1e-11 * scale;
  int iterations = 0;

  auto passive_indices = [&]() {
    std::vector<int> idx;
    for (int j = 0; j < m; ++j) {
      if (passive[static_cast<size_t>(j)]) idx.push_back(j);
    }
    return idx;
  };

  auto subproblem = [&](const std::vector<int>& idx) {
    const int p = static_cast<int>(idx.size());
    Eigen::MatrixXd Mpp(p, p);
    Eigen::VectorXd qp(p);
    for (int r = 0; r < p; ++r) {
      qp(r) = q(idx[static_cast<size_t>(r)]);
      for (int c = 0; c < p; ++c) {
        Mpp(r, c) = M(idx[static_cast<size_t>(r)], idx[static_cast<size_t>(c)]);
      }
    }
    Eigen::VectorXd z = Mpp.ldlt().solve(qp);
    if (!z.allFinite()) throw SingularSystem("nnls subproblem is singular");
    return z;
  };

  // Moves x to the subproblem solution on the passive set, stepping back and
  // pruning coordinates whenever the solution leaves the feasible orthant.
  auto feasibility_loop = [&]() {
    while (true) {
      if (++iterations > max_iterations) {
        throw MaxIterations("nnls exceeded " + std::to_string(max_iterations) + " iterations");
      }
      const auto idx = passive_indices();
      if (idx.empty()) return;
      const Eigen::VectorXd z = subproblem(idx);
      std::vector<double> ratio(idx.size(), 2.0);  // >1 means unconstrained
      double step = 1.0;
      for (size_t r = 0; r < idx.size(); ++r) {
        if (z(static_cast<Eigen::Index>(r)) <= 0.0) {
          const double xi = x(idx[r]);
          const double denom = xi - z(static_cast<Eigen::Index>(r));
          ratio[r] = denom > 0.0 ? xi / denom : 0.0;
          step = std::min(step, ratio[r]);
        }
      }
      if (step >= 1.0) {
        for (size_t r = 0; r < idx.size(); ++r) x(idx[r]) = z(static_cast<Eigen::Index>(r));
        return;
      }
      for (size_t r = 0; r < idx.size(); ++r) {
        const double xi = x(idx[r]);
        x(idx[r]) = xi + step * (z(static_cast<Eigen::Index>(r)) - xi);
      }
      // prune every bound-seeking coordinate that reached zero at this step
      for (size_t r = 0; r < idx.size(); ++r) {
        if (z(static_cast<Eigen::Index>(r)) > 0.0) continue;
        if (ratio[r] <= step * (1.0 + 1e-9) || x(idx[r]) <= 0.0) {
          x(idx[r]) = 0.0;
          passive[static_cast<size_t>(idx[r])] = false;
        }
      }
    }
  };

  if (!warm_start_passive.empty()) feasibility_loop();

  while (true) {
    const Eigen::VectorXd w = q - M * x;
    int enter = -1;
    double w_max = dual_tol;
    for (int j = 0; j < m; ++j) {
      if (!passive[static_cast<size_t>(j)] && !banned[static_cast<size_t>(j)] && w(j) > w_max) {
        w_max = w(j);
        enter = j;
      }
    }
    if (enter < 0) break;  // KKT reached (up to banned coordinates)
    passive[static_cast<size_t>(enter)] = true;
    const Eigen::VectorXd x_before = x;
    feasibility_loop();
    if (!passive[static_cast<size_t>(enter)] && (x - x_before).lpNorm<Eigen::Infinity>() == 0.0) {
      banned[static_cast<size_t>(enter)] = true;  // numerically stuck at its bound
    }
  }

  NnlsResult result;
  result.x = x;
  result.iterations = iterations;
  for (int j = 0; j < m; ++j) {
    if (!passive[static_cast<size_t>(j)]) result.active.push_back(j);
  }
  return result;
}

}  // namespace retrocast

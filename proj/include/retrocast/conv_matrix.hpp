#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "retrocast/kernel.hpp"

namespace retrocast {

/// Shape of a convolution matrix: n_obs output days, and L+1 additional
/// pre-window input unknowns (pre_window_L = -1 means none, giving the square
/// lower-triangular Toeplitz case). truncation_length bounds the kernel
/// support used in sums; beyond it the tail mass is negligible.
struct ConvMatrixSpec {
  ExpKernel kernel;
  int n_obs = 0;
  int pre_window_L = -1;
  int truncation_length = 0;

  int n_unknowns() const { return n_obs + pre_window_L + 1; }
};

/// Smallest truncation length satisfying the spec invariants: long enough for
/// every matrix entry and with relative tail mass below 1e-12.
inline int default_truncation(const ExpKernel& k, int n_obs, int pre_window_L) {
  const int structural = n_obs + std::max(pre_window_L, 0) + 1;
  if (k.alpha <= 0.0) return structural;
  // tail mass sum_{t>=T} g_t = mu * alpha^T; want alpha^T < 1e-12
  const int tail = static_cast<int>(std::ceil(std::log(1e-12) / std::log(k.alpha))) + 1;
  return std::max(structural, tail);
}

inline ConvMatrixSpec make_conv_spec(const ExpKernel& k, int n_obs, int pre_window_L = -1) {
  return {k, n_obs, pre_window_L, default_truncation(k, n_obs, pre_window_L)};
}

inline void validate(const ConvMatrixSpec& spec) {
  spec.kernel.validate();
  if (spec.n_obs <= 0) throw Error("conv matrix needs n_obs > 0");
  if (spec.pre_window_L < -1) throw Error("pre_window_L must be >= -1");
  if (spec.truncation_length < spec.n_obs + std::max(spec.pre_window_L, 0) + 1) {
    throw Error("truncation_length too small for matrix dimensions");
  }
  if (spec.kernel.alpha > 0.0 && spec.kernel.beta > 0.0) {
    const double mu = spec.kernel.beta / (1.0 - spec.kernel.alpha);
    const double tail = mu * std::pow(spec.kernel.alpha, spec.truncation_length);
    if (!(tail < 1e-12 * mu)) throw Error("kernel tail mass above truncation tolerance");
  }
}

/// Banded convolution matrix mapping the n_obs + L + 1 input unknowns
/// (L+1 pre-window values followed by the in-window ones) to the n_obs
/// outputs: entry (i, j) is the kernel weight at lag L + i - j + 1 (0-based),
/// zero for negative lags. L = -1 yields the lower-triangular Toeplitz matrix
/// with first column (g_0, ..., g_{n-1}).
inline Eigen::MatrixXd build_conv_matrix(const ConvMatrixSpec& spec) {
  validate(spec);
  const int n = spec.n_obs;
  const int m = spec.n_unknowns();
  const int L = spec.pre_window_L;
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, m);
  // weights g_0 .. g_{L+n}; all lags appearing in the matrix
  std::vector<double> g(static_cast<size_t>(L + n + 1 > 0 ? L + n + 1 : 0));
  for (int t = 0; t < static_cast<int>(g.size()); ++t) g[static_cast<size_t>(t)] = kernel_eval(spec.kernel, t);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      const int lag = L + i - j + 1;
      if (lag >= 0) G(i, j) = g[static_cast<size_t>(lag)];
    }
  }
  return G;
}

}  // namespace retrocast

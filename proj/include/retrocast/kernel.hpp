#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "retrocast/errors.hpp"
#include "retrocast/series.hpp"

namespace retrocast {

/// Delayed exponential impulse response: weight beta * alpha^t at lag t >= 0,
/// zero for t < 0, applied with an integer day offset `delay_days` between
/// the input and output date grids (negative offsets are a pure relabeling of
/// dates, not acausality).
struct ExpKernel {
  double alpha = 0.0;      // decay per day, in [0, 1)
  double beta = 0.0;       // output units per input unit at lag 0
  int delay_days = 0;

  void validate() const {
    if (!(alpha >= 0.0 && alpha < 1.0)) {
      throw Error("kernel alpha must lie in [0, 1), got " + std::to_string(alpha));
    }
    if (!(beta >= 0.0) || !std::isfinite(beta)) {
      throw Error("kernel beta must be nonnegative, got " + std::to_string(beta));
    }
  }
};

/// Kernel weight at integer lag t. Uses the convention 0^0 = 1 so alpha = 0
/// degenerates to a one-day kernel.
inline double kernel_eval(const ExpKernel& k, int t) {
  if (t < 0) return 0.0;
  if (t == 0) return k.beta;
  return k.beta * std::pow(k.alpha, t);
}

/// Derived scalar descriptors of a kernel.
struct KernelStats {
  double gain_mu = 0.0;             // sum of all kernel weights
  double time_constant_days = 0.0;  // -1/ln(alpha); 0 when alpha == 0
  double mean_lag_days = 0.0;       // mean of the normalized geometric lag, alpha/(1-alpha)
  bool degenerate_alpha = false;    // alpha == 0: time constant undefined
};

inline KernelStats kernel_stats(const ExpKernel& k) {
  k.validate();
  KernelStats s;
  s.gain_mu = k.beta / (1.0 - k.alpha);
  s.mean_lag_days = k.alpha / (1.0 - k.alpha);
  if (k.alpha > 0.0) {
    s.time_constant_days = -1.0 / std::log(k.alpha);
  } else {
    s.time_constant_days = 0.0;
    s.degenerate_alpha = true;
  }
  return s;
}

/// One-sided geometric filter: psi_t = sum_{j>=0} alpha^j u_{t-j}, with u
/// treated as zero before its first sample. Computed by the exact recurrence
/// psi_t = alpha * psi_{t-1} + u_t, so no truncation is involved.
inline std::vector<double> exp_filter(std::span<const double> u, double alpha) {
  std::vector<double> psi(u.size());
  double acc = 0.0;
  for (size_t t = 0; t < u.size(); ++t) {
    acc = alpha * acc + u[t];
    psi[t] = acc;
  }
  return psi;
}

/// Convolution of u with the kernel on u's own index grid:
/// y_i = sum_{j>=0} g_j u_{i-j-D}, u zero outside its support. Output has the
/// same length and origin as u.
inline std::vector<double> convolve(std::span<const double> u, const ExpKernel& k) {
  k.validate();
  const int n = static_cast<int>(u.size());
  std::vector<double> y(u.size(), 0.0);
  if (n == 0) return y;
  const auto u_at = [&](int idx) { return (idx >= 0 && idx < n) ? u[static_cast<size_t>(idx)] : 0.0; };
  // y_i = alpha * y_{i-1} + beta * u_{i-D}; seed y_0 by direct summation
  // over the samples at or before index -D.
  double y0 = 0.0;
  for (int idx = 0; idx <= -k.delay_days; ++idx) {
    y0 = k.alpha * y0 + k.beta * u_at(idx);
  }
  y[0] = y0;
  for (int i = 1; i < n; ++i) {
    y[static_cast<size_t>(i)] = k.alpha * y[static_cast<size_t>(i) - 1] + k.beta * u_at(i - k.delay_days);
  }
  return y;
}

/// Series overload; values are convolved on the series' date grid, metadata
/// other than the smoothed flag is preserved.
inline DailySeries convolve(const DailySeries& u, const ExpKernel& k) {
  DailySeries out = u;
  out.values = convolve(std::span<const double>(u.values), k);
  return out;
}

}  // namespace retrocast

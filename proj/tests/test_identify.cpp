#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <random>

#include "helpers.hpp"

using namespace retrocast;
using Catch::Approx;

namespace {

/// Regressor phi_t = sum_j alpha^j u_{t-j-delay} computed by direct summation
/// (independent of the production geometric-filter recurrence).
std::vector<double> phi_direct(double alpha, int delay, const std::vector<double>& u, int n_y,
                               int y_start_in_u) {
  std::vector<double> phi(static_cast<size_t>(n_y), 0.0);
  for (int t = 0; t < n_y; ++t) {
    double acc = 0.0;
    for (int l = 0; l < static_cast<int>(u.size()); ++l) {
      const int j = t + y_start_in_u - delay - l;  // lag applied to u sample l
      if (j >= 0) acc += std::pow(alpha, j) * u[static_cast<size_t>(l)];
    }
    phi[static_cast<size_t>(t)] = acc;
  }
  return phi;
}

}  // namespace

TEST_CASE("profile_beta exact and orthogonal fits", "[identify]") {
  std::mt19937_64 eng(29);
  std::uniform_real_distribution<double> uval(0.0, 10.0);
  std::vector<double> u(50);
  for (double& v : u) v = uval(eng);
  const double alpha = 0.7;
  const int delay = -2;
  const std::vector<double> phi = phi_direct(alpha, delay, u, 50, 0);

  SECTION("y = 2 phi gives beta = 2 and zero rss") {
    std::vector<double> y(phi.size());
    for (size_t t = 0; t < y.size(); ++t) y[t] = 2.0 * phi[t];
    const ProfileFit fit = profile_beta(alpha, delay, u, y);
    REQUIRE(fit.beta == Approx(2.0).epsilon(1e-10));
    REQUIRE(fit.rss == Approx(0.0).margin(1e-8));
  }

  SECTION("y orthogonal to phi gives beta = 0 and rss = |y|^2") {
    std::vector<double> w(phi.size());
    for (double& v : w) v = uval(eng);
    double swp = 0.0, spp = 0.0;
    for (size_t t = 0; t < w.size(); ++t) {
      swp += w[t] * phi[t];
      spp += phi[t] * phi[t];
    }
    std::vector<double> y(w.size());
    double y2 = 0.0;
    for (size_t t = 0; t < w.size(); ++t) {
      y[t] = w[t] - (swp / spp) * phi[t];
      y2 += y[t] * y[t];
    }
    const ProfileFit fit = profile_beta(alpha, delay, u, y);
    REQUIRE(fit.beta == Approx(0.0).margin(1e-9));
    REQUIRE(fit.rss == Approx(y2).epsilon(1e-9));
  }

  SECTION("negative least-squares slope is clipped to zero") {
    std::vector<double> y(phi.size());
    for (size_t t = 0; t < y.size(); ++t) y[t] = -1.5 * phi[t];
    const ProfileFit fit = profile_beta(alpha, delay, u, y);
    REQUIRE(fit.beta == 0.0);
    double y2 = 0.0;
    for (double v : y) y2 += v * v;
    REQUIRE(fit.rss == Approx(y2).epsilon(1e-12));
  }

  SECTION("zero input has no regressor") {
    const std::vector<double> zeros(30, 0.0);
    const std::vector<double> y(30, 1.0);
    REQUIRE_THROWS_AS(profile_beta(0.5, 0, zeros, y), ZeroRegressor);
  }
}

TEST_CASE("profile_beta matches a generic least-squares solver", "[identify]") {
  std::mt19937_64 eng(31);
  std::uniform_real_distribution<double> uval(0.0, 5.0), unoise(-0.5, 0.5), ua(0.0, 0.95);
  std::uniform_int_distribution<int> ud(-6, 4), uoff(0, 10);
  for (int it = 0; it < 50; ++it) {
    std::vector<double> u(60);
    for (double& v : u) v = uval(eng);
    const double alpha = ua(eng);
    const int delay = ud(eng);
    const int offset = uoff(eng);
    const int n_y = 40;
    const std::vector<double> phi = phi_direct(alpha, delay, u, n_y, offset);
    std::vector<double> y(static_cast<size_t>(n_y));
    for (int t = 0; t < n_y; ++t) {
      y[static_cast<size_t>(t)] = 0.8 * phi[static_cast<size_t>(t)] + unoise(eng);
    }

    Eigen::MatrixXd X(n_y, 1);
    Eigen::VectorXd Y(n_y);
    for (int t = 0; t < n_y; ++t) {
      X(t, 0) = phi[static_cast<size_t>(t)];
      Y(t) = y[static_cast<size_t>(t)];
    }
    const double beta_ls = X.colPivHouseholderQr().solve(Y)(0);
    const double rss_ls = (Y - std::max(beta_ls, 0.0) * X.col(0)).squaredNorm();

    const ProfileFit fit = profile_beta(alpha, delay, u, y, offset);
    REQUIRE(fit.beta == Approx(std::max(beta_ls, 0.0)).margin(1e-12));
    REQUIRE(fit.rss == Approx(rss_ls).margin(1e-9));
  }
}

TEST_CASE("identify recovers a known kernel noise-free", "[identify]") {
  const DailySeries u = testhelp::wave_input(120);
  const ExpKernel truth{0.85, 0.06, -8};
  const DailySeries y = convolve(u, truth);

  const IdentResult res = identify(u, y);
  REQUIRE(res.kernel.delay_days == truth.delay_days);
  REQUIRE(res.kernel.alpha == Approx(truth.alpha).margin(1e-4));
  REQUIRE(res.kernel.beta == Approx(truth.beta).epsilon(1e-4));
  REQUIRE(res.rss == Approx(0.0).margin(1e-8));

  // bookkeeping invariants
  REQUIRE(res.fitted_y.size() == y.values.size());
  double rss = 0.0;
  for (size_t t = 0; t < y.values.size(); ++t) {
    REQUIRE(res.fitted_y[t] + res.residuals[t] == Approx(y.values[t]).margin(1e-10));
    rss += res.residuals[t] * res.residuals[t];
  }
  REQUIRE(res.rss == Approx(rss).margin(1e-10));
  REQUIRE(res.stats.gain_mu == Approx(res.kernel.beta / (1.0 - res.kernel.alpha)));
}

TEST_CASE("identify uses pre-window input history", "[identify]") {
  // y is a late window of the full response; the input before the window
  // matters and must be consumed by use_available
  const DailySeries u = testhelp::wave_input(150);
  const ExpKernel truth{0.8, 0.1, -3};
  const DailySeries y_full = convolve(u, truth);
  const DailySeries y = window(y_full, {u.start + 60, u.start + 140});

  const IdentResult res = identify(u, y);
  REQUIRE(res.kernel.delay_days == truth.delay_days);
  REQUIRE(res.kernel.alpha == Approx(truth.alpha).margin(1e-4));
  REQUIRE(res.kernel.beta == Approx(truth.beta).epsilon(1e-3));
  REQUIRE(res.rss == Approx(0.0).margin(1e-8));

  // zero-padding the history must change (worsen) the noise-free fit
  IdentConfig zp;
  zp.history = IdentConfig::InputHistory::zero_pad;
  const IdentResult res_zp = identify(u, y, zp);
  REQUIRE(res_zp.rss > 1e-6);
}

TEST_CASE("identify returned rss is the minimum over the evaluated grid", "[identify]") {
  std::mt19937_64 eng(37);
  std::normal_distribution<double> noise(0.0, 3.0);
  const DailySeries u = testhelp::wave_input(100);
  DailySeries y = convolve(u, {0.7, 0.12, -5});
  for (double& v : y.values) v += noise(eng);

  IdentConfig cfg;
  cfg.delay_min = -10;
  cfg.delay_max = 2;
  const IdentResult res = identify(u, y, cfg);

  for (int delay = cfg.delay_min; delay <= cfg.delay_max; ++delay) {
    for (double alpha : cfg.alpha_grid) {
      const ProfileFit fit = profile_beta(alpha, delay, u.values, y.values, 0);
      REQUIRE(res.rss <= fit.rss * (1.0 + 1e-12) + 1e-12);
    }
  }
}

TEST_CASE("identify scale equivariance", "[identify]") {
  std::mt19937_64 eng(41);
  std::normal_distribution<double> noise(0.0, 1.0);
  const DailySeries u = testhelp::wave_input(110);
  DailySeries y = convolve(u, {0.82, 0.07, -6});
  for (double& v : y.values) v += noise(eng);
  const IdentResult base = identify(u, y);

  SECTION("scaling y scales beta and leaves (alpha, D) unchanged") {
    DailySeries y2 = y;
    for (double& v : y2.values) v *= 3.7;
    const IdentResult res = identify(u, y2);
    REQUIRE(res.kernel.delay_days == base.kernel.delay_days);
    REQUIRE(res.kernel.alpha == Approx(base.kernel.alpha).margin(1e-6));
    REQUIRE(res.kernel.beta == Approx(3.7 * base.kernel.beta).epsilon(1e-6));
  }
  SECTION("scaling u scales beta inversely and fixes fitted_y") {
    DailySeries u2 = u;
    for (double& v : u2.values) v *= 4.0;
    const IdentResult res = identify(u2, y);
    REQUIRE(res.kernel.delay_days == base.kernel.delay_days);
    REQUIRE(res.kernel.alpha == Approx(base.kernel.alpha).margin(1e-6));
    REQUIRE(res.kernel.beta == Approx(base.kernel.beta / 4.0).epsilon(1e-6));
    for (size_t t = 0; t < base.fitted_y.size(); ++t) {
      REQUIRE(res.fitted_y[t] == Approx(base.fitted_y[t]).epsilon(1e-6).margin(1e-9));
    }
  }
}

TEST_CASE("identify rejects bad inputs", "[identify]") {
  DailySeries u = testhelp::wave_input(50);
  DailySeries y = convolve(u, {0.5, 0.1, 0});

  SECTION("non-finite input") {
    DailySeries bad = u;
    bad.values[10] = std::nan("");
    REQUIRE_THROWS_AS(identify(bad, y), NonFiniteInput);
    DailySeries bad_y = y;
    bad_y.values[3] = std::numeric_limits<double>::infinity();
    REQUIRE_THROWS_AS(identify(u, bad_y), NonFiniteInput);
  }
  SECTION("all-zero input") {
    DailySeries zeros = u;
    std::fill(zeros.values.begin(), zeros.values.end(), 0.0);
    REQUIRE_THROWS_AS(identify(zeros, y), ZeroRegressor);
  }
  SECTION("empty search grid") {
    IdentConfig cfg;
    cfg.delay_min = 3;
    cfg.delay_max = -3;
    REQUIRE_THROWS_AS(identify(u, y, cfg), Error);
  }
}

TEST_CASE("identify tolerates noise (reduced Monte Carlo)", "[identify]") {
  const DailySeries u = testhelp::wave_input(120);
  const ExpKernel truth{0.85, 0.06, -8};
  const DailySeries y0 = convolve(u, truth);
  const double peak = *std::max_element(y0.values.begin(), y0.values.end());

  int ok = 0;
  const int n_seeds = 20;
  for (int seed = 0; seed < n_seeds; ++seed) {
    std::mt19937_64 eng(static_cast<unsigned long long>(seed) + 1000);
    std::normal_distribution<double> noise(0.0, 0.05 * peak);
    DailySeries y = y0;
    for (double& v : y.values) v += noise(eng);
    const IdentResult res = identify(u, y);
    if (std::abs(res.kernel.alpha - truth.alpha) <= 0.03 &&
        std::abs(res.kernel.delay_days - truth.delay_days) <= 1) {
      ++ok;
    }
  }
  REQUIRE(ok >= 18);
}

TEST_CASE("predict wraps convolution with the identified kernel", "[identify]") {
  IdentResult res;
  res.kernel = {0.6, 0.5, -2};
  res.stats = kernel_stats(res.kernel);

  SECTION("impulse input returns kernel values") {
    DailySeries u;
    u.start = make_date(2020, 10, 1);
    u.values.assign(15, 0.0);
    u.values[4] = 1.0;
    const DailySeries p = predict(res, u);
    REQUIRE(p.quantity == Quantity::hospital_admissions);
    for (int t = 0; t < p.size(); ++t) {
      REQUIRE(p[t] == Approx(kernel_eval(res.kernel, t - 2)).margin(1e-14));
    }
  }
  SECTION("zero input returns zero output") {
    DailySeries u;
    u.start = make_date(2020, 10, 1);
    u.values.assign(12, 0.0);
    const DailySeries p = predict(res, u);
    for (int t = 0; t < p.size(); ++t) REQUIRE(p[t] == 0.0);
  }
}

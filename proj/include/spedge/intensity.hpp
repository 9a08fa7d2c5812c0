#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "spedge/prob_approx.hpp"
#include "spedge/scalar_theory.hpp"

// The limiting edge intensity rho: a lattice of Gaussian tails with
// geometric weights,
//   rho([s, inf)) = sum_l u^{<du>+l} G(s + theta(u) (<du>+l)),
// evaluated termwise in log space with a self-verifying cutoff. Also the
// window edge kappa, the finite-graph approximation rho~ built from exact
// Poisson tails, and the limiting CDF exp(-rho([s, inf))).

namespace spedge {

// 1-periodic representative of x in [-1/2, 1/2); the tie x = k + 1/2 maps
// to -1/2.
inline double periodic_rep(double x) {
  double y = x - std::floor(x + 0.5);
  if (y >= 0.5) y -= 1.0;  // only reachable through roundoff
  return y;
}

struct IntensityCurve {
  ScaleParams params;
  double frac_part = 0.0;  // <d u>
  // Bookkeeping: the last self-verified l-sum truncation, updated on
  // evaluation so callers can report it.
  mutable int ell_cutoff = 50;
};

inline IntensityCurve make_intensity_curve(const ScaleParams& p) {
  IntensityCurve c;
  c.params = p;
  c.frac_part = periodic_rep(p.d * p.u_frak);
  return c;
}

namespace detail {

// Core lattice sum: sum over l of u^{h+l} * G(s + theta (h+l)), returned in
// linear scale. `use_density` replaces G by the Gaussian density g. The
// cutoff starts at the analytic estimate and doubles until the relative
// change drops below 1e-12 (both tails decay at least geometrically).
inline double lattice_sum(double u, double theta, double h, double s,
                          bool use_density, int* cutoff_out = nullptr) {
  if (!(u > 1.0)) throw std::domain_error("lattice_sum: need u > 1");
  const double log_u = std::log(u);
  const auto eval = [&](int L) {
    // log-sum-exp over l in [-L, L]
    double max_log = -std::numeric_limits<double>::infinity();
    std::vector<double> logs;
    logs.reserve(static_cast<std::size_t>(2 * L + 1));
    for (int l = -L; l <= L; ++l) {
      const double level = h + static_cast<double>(l);
      const double arg = s + theta * level;
      const double lg = use_density
                            ? -0.5 * arg * arg - 0.5 * std::log(2.0 * M_PI)
                            : log_gaussian_tail(arg);
      const double lt = level * log_u + lg;
      logs.push_back(lt);
      if (lt > max_log) max_log = lt;
    }
    if (max_log == -std::numeric_limits<double>::infinity()) return 0.0;
    double acc = 0.0;
    for (double lt : logs) acc += std::exp(lt - max_log);
    return std::exp(max_log) * acc;
  };

  int L = std::max(50, static_cast<int>(std::ceil(10.0 + std::abs(s) / theta)) +
                           static_cast<int>(std::ceil(10.0 / log_u)));
  double val = eval(L);
  for (int round = 0; round < 20; ++round) {
    const int L2 = 2 * L;
    const double val2 = eval(L2);
    if (std::abs(val2 - val) <= 1e-12 * std::abs(val2)) {
      val = val2;
      L = L2;
      break;
    }
    val = val2;
    L = L2;
  }
  if (cutoff_out) *cutoff_out = L;
  return val;
}

}  // namespace detail

// rho([s, inf)), the expected number of rescaled edge eigenvalues at or
// above s in the limit.
inline double rho_tail(const IntensityCurve& curve, double s) {
  return detail::lattice_sum(curve.params.u_frak, curve.params.theta,
                             curve.frac_part, s, false, &curve.ell_cutoff);
}

// -d/ds rho([s, inf)): the termwise derivative, a positive density.
inline double rho_density(const IntensityCurve& curve, double s) {
  return detail::lattice_sum(curve.params.u_frak, curve.params.theta,
                             curve.frac_part, s, true, nullptr);
}

struct WindowSpec {
  double K = 0.0;
  double kappa = 0.0;
};

// Solve rho([-kappa, inf)) = K for kappa; the tail is continuous and
// strictly monotone, so bisection applies. kappa <= 0 is a legal answer
// (it simply means K is below the mass already right of zero).
inline WindowSpec solve_kappa(const IntensityCurve& curve, double K) {
  if (!(K > 0.0)) throw std::domain_error("solve_kappa: need K > 0");
  double lo = -1.0, hi = 1.0;  // bracket in s, where rho_tail(s) = K
  for (int i = 0; i < 200 && rho_tail(curve, lo) < K; ++i) lo -= 2.0;
  for (int i = 0; i < 200 && rho_tail(curve, hi) > K; ++i) hi += 2.0;
  while (hi - lo > 1e-13 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)))) {
    const double mid = 0.5 * (lo + hi);
    if (rho_tail(curve, mid) > K)
      lo = mid;
    else
      hi = mid;
  }
  WindowSpec w;
  w.K = K;
  const double s_star = 0.5 * (lo + hi);
  w.kappa = -s_star;
  if (std::abs(rho_tail(curve, s_star) - K) > 1e-9 * K)
    throw std::runtime_error("solve_kappa: residual tolerance not met");
  return w;
}

// Finite-graph approximation of the tail: degrees are exactly Poisson(d)
// and the second-sphere fluctuation is the exact window statistic Q,
//   rho~([s, inf)) = sum over integer degrees v with |v - d u| <= d q of
//                    N P(Poisson(d) = v) Q(v, s - theta (v - d u)),
// where Q(v, w) is the Poisson(d v) upper tail at d v + w sqrt(d v).
inline double rho_tilde_tail(long long N, double d, double q, double s) {
  if (!(q > 0.0)) throw std::domain_error("rho_tilde_tail: need q > 0");
  const ScaleParams p = solve_scale_params(N, d);
  const double du = d * p.u_frak;
  const long long v_lo =
      std::max<long long>(0, static_cast<long long>(std::ceil(du - d * q)));
  const long long v_hi = static_cast<long long>(std::floor(du + d * q));
  double acc = 0.0;
  for (long long v = v_lo; v <= v_hi; ++v) {
    const double w = s - p.theta * (static_cast<double>(v) - du);
    const double weight = static_cast<double>(N) * poisson_pmf(v, d);
    acc += weight * q_statistic(static_cast<double>(v), w, d);
  }
  return acc;
}

// Limiting CDF of the rescaled largest eigenvalue in the critical regime:
// exp(-rho([s, inf))) evaluated through the same lattice sum.
inline double limit_cdf_largest(double u_bar, double h, double s) {
  if (!(u_bar > 2.0)) throw std::domain_error("limit_cdf_largest: need u_bar > 2");
  if (!(h >= -0.5) || !(h < 0.5))
    throw std::domain_error("limit_cdf_largest: need h in [-1/2, 1/2)");
  const double theta = theta_of(u_bar);
  return std::exp(-detail::lattice_sum(u_bar, theta, h, s, false, nullptr));
}

}  // namespace spedge

#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

// Scalar predictor layer: the degree rate function, the scale parameters
// (u, a, theta, tau, sigma) attached to a graph size (N, d), and the closed
// form for the top eigenvalue of the idealized two-parameter tridiagonal
// operator, together with its derivatives and characteristic quartic.

namespace spedge {

namespace detail {

// Bisection for a continuous increasing function g on [lo, hi].
// Returns the abscissa where g crosses `target` within `tol`.
template <class F>
double bisect_increasing(F g, double lo, double hi, double target, double tol) {
  if (g(lo) > target || g(hi) < target)
    throw std::domain_error("bisect_increasing: target not bracketed");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) <= target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

// Rate function of the normalized degree profile,
//   f(u) = u log u - (u - 1) + log(sqrt(2 pi d u)) / d,
// strictly increasing on [1, inf) since f'(u) = log u + 1/(2 d u) > 0.
inline double eval_f(double u, double d) {
  if (!(u >= 1.0) || !(d > 0.0))
    throw std::domain_error("eval_f: need u >= 1 and d > 0");
  return u * std::log(u) - (u - 1.0) +
         std::log(std::sqrt(2.0 * M_PI * d * u)) / d;
}

// Cramer rate of a unit-mean Poisson variable, h(a) = (1+a) log(1+a) - a.
inline double eval_h(double a) {
  if (!(a > -1.0)) throw std::domain_error("eval_h: need a > -1");
  return (1.0 + a) * std::log1p(a) - a;
}

// 1 / (log 4 - 1), the slope constant in the large-degree expansion of the
// scale equation.
inline constexpr double b_star = 1.0 / (2.0 * M_LN2 - 1.0);

// Largest eigenvalue of the idealized operator with vertex weight alpha and
// first-sphere weight beta:
//   Lambda(alpha, beta) = alpha / sqrt(mu),
//   mu = alpha - (beta/2)(alpha + beta) + (beta/2) sqrt((alpha+beta)^2 - 4 alpha).
// On the stated domain mu > 0, so the expression is well defined.
inline double lambda_ab(double alpha, double beta) {
  constexpr double beta_min = 2.0 * (M_SQRT2 - 1.0);
  if (!(alpha >= 2.0) || !(beta >= beta_min))
    throw std::domain_error(
        "lambda_ab: need alpha >= 2 and beta >= 2(sqrt(2)-1)");
  double disc = (alpha + beta) * (alpha + beta) - 4.0 * alpha;
  if (disc < 0.0) disc = 0.0;  // only reachable through roundoff on the domain
  const double mu =
      alpha - 0.5 * beta * (alpha + beta) + 0.5 * beta * std::sqrt(disc);
  return alpha / std::sqrt(mu);
}

// Pointwise extension of lambda_ab used when evaluating the predictor on
// measured vertex profiles, whose beta can fluctuate slightly below the
// clean-domain boundary. Defined wherever the discriminant and mu are
// positive; returns NaN otherwise so callers can drop the point explicitly.
inline double lambda_ab_extended(double alpha, double beta) {
  if (!(alpha >= 2.0) || !(beta > 0.0))
    return std::numeric_limits<double>::quiet_NaN();
  const double disc = (alpha + beta) * (alpha + beta) - 4.0 * alpha;
  if (disc < 0.0) return std::numeric_limits<double>::quiet_NaN();
  const double mu =
      alpha - 0.5 * beta * (alpha + beta) + 0.5 * beta * std::sqrt(disc);
  if (!(mu > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return alpha / std::sqrt(mu);
}

// Degree-corrected predictor: Lambda_frak(alpha, beta) at correction
// frak = 1 + 1/d, i.e. sqrt(frak) * Lambda(alpha/frak, beta/frak).
inline double lambda_d(double alpha, double beta, double d) {
  if (!(d > 0.0)) throw std::domain_error("lambda_d: need d > 0");
  const double frak = 1.0 + 1.0 / d;
  return std::sqrt(frak) * lambda_ab(alpha / frak, beta / frak);
}

// Same extension as lambda_ab_extended, with the degree correction.
inline double lambda_d_extended(double alpha, double beta, double d) {
  if (!(d > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  const double frak = 1.0 + 1.0 / d;
  return std::sqrt(frak) * lambda_ab_extended(alpha / frak, beta / frak);
}

// Partial derivatives of Lambda at beta = 1:
//   d/dalpha = (alpha - 2) / (2 (alpha - 1)^{3/2}),
//   d/dbeta  = alpha (alpha - 2) / (2 (alpha - 1)^{5/2}).
inline std::pair<double, double> lambda_derivatives_at_beta1(double alpha) {
  if (!(alpha > 2.0))
    throw std::domain_error("lambda_derivatives_at_beta1: need alpha > 2");
  const double am1 = alpha - 1.0;
  return {(alpha - 2.0) / (2.0 * std::pow(am1, 1.5)),
          alpha * (alpha - 2.0) / (2.0 * std::pow(am1, 2.5))};
}

// Characteristic quartic whose positive root beyond 2 is Lambda(alpha, beta):
//   q(lambda) = (1 - beta) lambda^4 + (alpha beta + beta^2 - 2 alpha) lambda^2 + alpha^2.
inline double quartic_q(double alpha, double beta, double lambda) {
  const double l2 = lambda * lambda;
  return (1.0 - beta) * l2 * l2 +
         (alpha * beta + beta * beta - 2.0 * alpha) * l2 + alpha * alpha;
}

// Scale parameters of a graph with N vertices and expected degree d.
//
//   u_frak : solution of f(u) = log(N)/d  (largest normalized degree scale)
//   a_frak : solution of h(a - 1) = log(N)/d (pure Poisson variant)
//   theta  : (u - 1)/sqrt(u), the eigenvalue spacing per unit degree
//   tau    : 2 (u-1)^{5/2} / (sqrt(u) (u-2)), the rescaling slope
//   sigma  : sqrt(frak) * Lambda(u/frak, 1/frak), the predicted edge location
//
// The supercritical regime u > 2 is required; below it the edge predictors
// are undefined and construction throws.
struct ScaleParams {
  long long N = 0;
  double d = 0.0;
  double d_frak = 0.0;  // 1 + 1/d
  double u_frak = 0.0;
  double a_frak = 0.0;
  double theta = 0.0;
  double tau = 0.0;
  double sigma = 0.0;
};

inline double theta_of(double u) { return (u - 1.0) / std::sqrt(u); }

inline double tau_of(double u) {
  if (!(u > 2.0)) throw std::domain_error("tau_of: need u > 2");
  return 2.0 * std::pow(u - 1.0, 2.5) / (std::sqrt(u) * (u - 2.0));
}

inline ScaleParams solve_scale_params(long long N, double d) {
  if (N < 3) throw std::domain_error("solve_scale_params: need N >= 3");
  const double logN = std::log(static_cast<double>(N));
  if (!(d > 0.0) || !(d <= 3.0 * logN))
    throw std::domain_error("solve_scale_params: need 0 < d <= 3 log N");
  const double target = logN / d;
  const double hi = std::max(4.0, 12.0 * target);

  ScaleParams p;
  p.N = N;
  p.d = d;
  p.d_frak = 1.0 + 1.0 / d;
  p.u_frak = detail::bisect_increasing(
      [d](double u) { return eval_f(u, d); }, 1.0, hi, target, 1e-12);
  p.a_frak = 1.0 + detail::bisect_increasing(
                       [](double a) { return eval_h(a); }, 0.0, hi, target,
                       1e-12);
  if (!(p.u_frak > 2.0) || !(p.u_frak / p.d_frak >= 2.0))
    throw std::domain_error(
        "solve_scale_params: subcritical predictor undefined (u <= 2)");
  p.theta = theta_of(p.u_frak);
  p.tau = tau_of(p.u_frak);
  p.sigma = std::sqrt(p.d_frak) *
            lambda_ab(p.u_frak / p.d_frak, 1.0 / p.d_frak);
  return p;
}

// Non-throwing variant for flows that must keep going at subcritical (N, d),
// e.g. reporting on dense graphs where only the detached eigenvalue exists.
inline bool try_scale_params(long long N, double d, ScaleParams& out) {
  try {
    out = solve_scale_params(N, d);
    return true;
  } catch (const std::domain_error&) {
    return false;
  }
}

// Location of the detached eigenvalue caused by the nonzero mean of the
// adjacency matrix: sqrt(d) + d^{-1/2} + d^{-3/2} after normalization.
inline double stray_location(double d) {
  if (!(d > 0.0)) throw std::domain_error("stray_location: need d > 0");
  return std::sqrt(d) + 1.0 / std::sqrt(d) + std::pow(d, -1.5);
}

}  // namespace spedge

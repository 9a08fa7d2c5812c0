#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include "spedge/scalar_theory.hpp"

// Probability toolkit: exact log-space Poisson and binomial tails, the
// Gaussian tail G, Bennett's inequality, the window statistic Q(v, w), and
// the binomial-vs-Poisson pointwise comparison.

namespace spedge {

// log P(Poisson(mu) = k).
inline double log_poisson_pmf(long long k, double mu) {
  if (k < 0) return -std::numeric_limits<double>::infinity();
  if (!(mu >= 0.0)) throw std::domain_error("log_poisson_pmf: need mu >= 0");
  if (mu == 0.0)
    return k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return static_cast<double>(k) * std::log(mu) - mu -
         std::lgamma(static_cast<double>(k) + 1.0);
}

inline double poisson_pmf(long long k, double mu) {
  return std::exp(log_poisson_pmf(k, mu));
}

namespace detail {

// Sum of pmf terms from k moving away from the mode, in units of the first
// term. Terms decrease monotonically in the summation direction, so the sum
// is truncated once a term drops below 1e-18 of the accumulated total.
inline double poisson_tail_upper_from(long long k, double mu) {
  // P(X >= k) for k > mu: terms decrease as j grows.
  const double base = log_poisson_pmf(k, mu);
  if (base == -std::numeric_limits<double>::infinity()) return 0.0;
  double acc = 1.0, term = 1.0;
  for (long long j = k + 1;; ++j) {
    term *= mu / static_cast<double>(j);
    acc += term;
    if (term < 1e-18 * acc) break;
  }
  return std::exp(base + std::log(acc));
}

inline double poisson_tail_lower_to(long long k, double mu) {
  // P(X <= k) for k < mu: terms decrease as j shrinks.
  if (k < 0) return 0.0;
  const double base = log_poisson_pmf(k, mu);
  double acc = 1.0, term = 1.0;
  for (long long j = k; j >= 1; --j) {
    term *= static_cast<double>(j) / mu;
    acc += term;
    if (term < 1e-18 * acc) break;
  }
  return std::exp(base + std::log(acc));
}

}  // namespace detail

enum class TailSide { kAtLeast, kAtMost };

// Exact Poisson tail P(X >= k) or P(X <= k) by stable summation. The sum
// always starts at k and moves away from the mode; when k is on the bulk
// side the complement is used, so catastrophic cancellation never occurs.
inline double poisson_tail(double mu, long long k, TailSide side) {
  if (!(mu >= 0.0)) throw std::domain_error("poisson_tail: need mu >= 0");
  if (side == TailSide::kAtLeast) {
    if (k <= 0) return 1.0;
    if (static_cast<double>(k) > mu) return detail::poisson_tail_upper_from(k, mu);
    return 1.0 - detail::poisson_tail_lower_to(k - 1, mu);
  }
  if (k < 0) return 0.0;
  if (static_cast<double>(k) < mu) return detail::poisson_tail_lower_to(k, mu);
  return 1.0 - detail::poisson_tail_upper_from(k + 1, mu);
}

// Standard Gaussian tail G(s) = P(N(0,1) >= s) and density g.
inline double gaussian_tail(double s) { return 0.5 * std::erfc(s / M_SQRT2); }

inline double gaussian_density(double s) {
  return std::exp(-0.5 * s * s) / std::sqrt(2.0 * M_PI);
}

// log G(s), valid far into the tail where G underflows. For moderate s the
// direct formula is exact; beyond erfc's range the asymptotic series
// G(s) = g(s)/s (1 - 1/s^2 + 3/s^4 - ...) takes over.
inline double log_gaussian_tail(double s) {
  if (s < 30.0) {
    const double g = gaussian_tail(s);
    if (g > 0.0) return std::log(g);
  }
  const double s2 = s * s;
  return -0.5 * s2 - 0.5 * std::log(2.0 * M_PI) - std::log(s) +
         std::log1p(-1.0 / s2 + 3.0 / (s2 * s2));
}

// Bennett bound P(X - mu >= a mu) <= exp(-mu h(a)) for X Poisson(mu) or
// binomial with mean mu; h from the scalar layer.
inline double bennett_bound(double mu, double a) {
  if (!(mu > 0.0)) throw std::domain_error("bennett_bound: need mu > 0");
  return std::exp(-mu * eval_h(a));
}

// Window statistic Q(v, w) = P(Poisson(d v) - d v >= w sqrt(d v)), the
// probability that a vertex of normalized degree v has a second-sphere
// fluctuation at least w. The threshold d v + w sqrt(d v) is rounded up to
// the next integer, or taken as-is when it already is one (within 1e-9).
inline double q_statistic(double v, double w, double d) {
  if (!(v >= 0.0) || !(d > 0.0))
    throw std::domain_error("q_statistic: need v >= 0 and d > 0");
  const double mu = d * v;
  if (mu == 0.0) return w <= 0.0 ? 1.0 : 0.0;
  const double bound = mu + w * std::sqrt(mu);
  const double rounded = std::round(bound);
  long long k;
  if (std::abs(bound - rounded) <= 1e-9 * std::max(1.0, std::abs(bound)))
    k = static_cast<long long>(rounded);
  else
    k = static_cast<long long>(std::ceil(bound));
  return poisson_tail(mu, k, TailSide::kAtLeast);
}

// log P(Binomial(n, p) = v).
inline double log_binomial_pmf(long long v, long long n, double p) {
  if (v < 0 || v > n) return -std::numeric_limits<double>::infinity();
  if (p <= 0.0) return v == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  if (p >= 1.0)
    return v == n ? 0.0 : -std::numeric_limits<double>::infinity();
  const double dn = static_cast<double>(n), dv = static_cast<double>(v);
  return std::lgamma(dn + 1.0) - std::lgamma(dv + 1.0) -
         std::lgamma(dn - dv + 1.0) + dv * std::log(p) +
         (dn - dv) * std::log1p(-p);
}

// Pointwise binomial-vs-Poisson pmf comparison at matched mean np.
// Returns the ratio P(Bin = v)/P(Poi = v) and the theoretical envelope
// 1 + envelope_c (v^2/n + p^2 n) that should contain |ratio - 1|.
struct BinomialPoissonReport {
  double ratio = 0.0;
  double envelope = 0.0;
};

inline BinomialPoissonReport binomial_poisson_check(long long n, double p,
                                                    long long v,
                                                    double envelope_c = 5.0) {
  if (n <= 0) throw std::domain_error("binomial_poisson_check: need n > 0");
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  if (v < 0 || static_cast<double>(v) > sqrt_n)
    throw std::domain_error("binomial_poisson_check: need 0 <= v <= sqrt(n)");
  if (!(p >= 0.0) || !(p <= 1.0 / sqrt_n))
    throw std::domain_error("binomial_poisson_check: need 0 <= p <= 1/sqrt(n)");
  BinomialPoissonReport rep;
  const double mu = p * static_cast<double>(n);
  const double log_ratio =
      log_binomial_pmf(v, n, p) - log_poisson_pmf(v, mu);
  rep.ratio = std::exp(log_ratio);
  const double dv = static_cast<double>(v), dn = static_cast<double>(n);
  rep.envelope = 1.0 + envelope_c * (dv * dv / dn + p * p * dn);
  return rep;
}

}  // namespace spedge

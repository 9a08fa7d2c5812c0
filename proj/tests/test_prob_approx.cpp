#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "spedge/prob_approx.hpp"
#include "spedge/scalar_theory.hpp"

using namespace spedge;

TEST_CASE("Poisson tails match high-precision reference values") {
  // References from an independent arbitrary-precision evaluation.
  CHECK(poisson_tail(1.0, 1, TailSide::kAtLeast) ==
        doctest::Approx(0.632120558828558).epsilon(1e-13));
  CHECK(poisson_tail(100.0, 100, TailSide::kAtLeast) ==
        doctest::Approx(0.513298798279149).epsilon(1e-11));
  CHECK(poisson_tail(10.0, 20, TailSide::kAtLeast) ==
        doctest::Approx(0.00345434197585683).epsilon(1e-13));
}

TEST_CASE("Poisson tail handles boundary thresholds exactly") {
  CHECK(poisson_tail(1.0, 0, TailSide::kAtLeast) == 1.0);
  CHECK(poisson_tail(5.0, -3, TailSide::kAtLeast) == 1.0);
  CHECK(poisson_tail(5.0, -1, TailSide::kAtMost) == 0.0);
  CHECK(poisson_tail(0.0, 0, TailSide::kAtLeast) == 1.0);
  CHECK(poisson_tail(0.0, 1, TailSide::kAtLeast) == 0.0);
  CHECK(poisson_tail(0.0, 0, TailSide::kAtMost) == 1.0);
  CHECK_THROWS_AS((void)poisson_tail(-1.0, 0, TailSide::kAtLeast),
                  std::domain_error);
}

TEST_CASE("the two Poisson tail sides are exact complements") {
  for (double mu : {0.5, 3.0, 10.0, 250.0}) {
    for (long long k : {1LL, 3LL, 9LL, 240LL, 270LL}) {
      const double up = poisson_tail(mu, k, TailSide::kAtLeast);
      const double dn = poisson_tail(mu, k - 1, TailSide::kAtMost);
      CHECK(up + dn == doctest::Approx(1.0).epsilon(1e-14));
    }
  }
}

TEST_CASE("tail differences reproduce the pmf and shrink monotonically") {
  for (double mu : {2.0, 40.0}) {
    double prev = 1.0;
    for (long long k = 0; k <= 80; ++k) {
      const double t = poisson_tail(mu, k, TailSide::kAtLeast);
      CHECK(t <= prev + 1e-15);
      const double tn = poisson_tail(mu, k + 1, TailSide::kAtLeast);
      CHECK(t - tn == doctest::Approx(poisson_pmf(k, mu)).epsilon(1e-10));
      prev = t;
    }
  }
  CHECK(poisson_pmf(-2, 3.0) == 0.0);
  CHECK(poisson_pmf(0, 0.0) == 1.0);
  CHECK(poisson_pmf(1, 0.0) == 0.0);
}

TEST_CASE("Gaussian tail and density have their textbook values") {
  CHECK(gaussian_tail(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(gaussian_tail(1.0) ==
        doctest::Approx(0.158655253931457).epsilon(1e-13));
  CHECK(gaussian_tail(2.0) ==
        doctest::Approx(0.0227501319481792).epsilon(1e-13));
  CHECK(gaussian_density(0.0) ==
        doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)).epsilon(1e-15));
  // Symmetry of the density, complement of the tail.
  CHECK(gaussian_density(1.3) == gaussian_density(-1.3));
  CHECK(gaussian_tail(-1.0) + gaussian_tail(1.0) ==
        doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("log Gaussian tail stays accurate far beyond underflow") {
  for (double s : {-2.0, 0.0, 1.0, 5.0, 12.0, 25.0}) {
    CHECK(log_gaussian_tail(s) ==
          doctest::Approx(std::log(gaussian_tail(s))).epsilon(1e-12));
  }
  // The asymptotic branch continues the direct one smoothly.
  CHECK(log_gaussian_tail(30.0 + 1e-6) ==
        doctest::Approx(log_gaussian_tail(30.0 - 1e-6)).epsilon(1e-6));
  // Far tail: finite, decreasing, and dominated by -s^2/2.
  const double l40 = log_gaussian_tail(40.0);
  const double l50 = log_gaussian_tail(50.0);
  CHECK(std::isfinite(l40));
  CHECK(l50 < l40);
  CHECK(l40 == doctest::Approx(-0.5 * 1600.0 - std::log(40.0) -
                               0.5 * std::log(2.0 * M_PI))
                   .epsilon(1e-3));
}

TEST_CASE("Bennett bound dominates the exact Poisson tail") {
  CHECK(bennett_bound(10.0, 1.0) ==
        doctest::Approx(0.021006074709708).epsilon(1e-12));
  // P(Poisson(10) >= 20) = 0.0034543... is well under the bound.
  CHECK(poisson_tail(10.0, 20, TailSide::kAtLeast) <=
        bennett_bound(10.0, 1.0));
  for (double mu : {10.0, 100.0}) {
    for (double a : {0.1, 0.5, 1.0, 2.0}) {
      const long long k =
          static_cast<long long>(std::ceil(mu * (1.0 + a)));
      CHECK(poisson_tail(mu, k, TailSide::kAtLeast) <= bennett_bound(mu, a));
    }
  }
  CHECK_THROWS_AS((void)bennett_bound(0.0, 1.0), std::domain_error);
}

TEST_CASE("Cramer function is squeezed by its quadratic envelopes") {
  for (double a : {0.1, 1.0, 10.0}) {
    const double h = eval_h(a);
    CHECK(h >= a * a / (2.0 * (1.0 + a / 3.0)));
    CHECK(h <= a * a / 2.0);
  }
}

TEST_CASE("window statistic matches reference values and bounds") {
  // References from an independent arbitrary-precision evaluation.
  CHECK(q_statistic(1.0, 0.0, 1.0) ==
        doctest::Approx(0.632120558828558).epsilon(1e-13));
  CHECK(q_statistic(100.0, 1.0, 100.0) ==
        doctest::Approx(0.159863099364121).epsilon(1e-9));

  // Always a probability, nonincreasing in the threshold offset.
  double prev = 1.0;
  for (double w : {-3.0, -1.0, 0.0, 0.5, 1.0, 2.0, 5.0}) {
    const double q = q_statistic(2.5, w, 8.0);
    CHECK(q >= 0.0);
    CHECK(q <= 1.0);
    CHECK(q <= prev + 1e-15);
    prev = q;
  }

  // Degenerate mean: a zero-degree vertex has no fluctuation at all.
  CHECK(q_statistic(0.0, 0.0, 8.0) == 1.0);
  CHECK(q_statistic(0.0, -1.0, 8.0) == 1.0);
  CHECK(q_statistic(0.0, 0.5, 8.0) == 0.0);

  CHECK_THROWS_AS((void)q_statistic(-1.0, 0.0, 8.0), std::domain_error);
  CHECK_THROWS_AS((void)q_statistic(1.0, 0.0, 0.0), std::domain_error);
}

TEST_CASE("window statistic rounds integer thresholds in place") {
  // v = 1, d = 10, w = 0: threshold exactly 10, so the tail starts at 10.
  CHECK(q_statistic(1.0, 0.0, 10.0) ==
        doctest::Approx(poisson_tail(10.0, 10, TailSide::kAtLeast))
            .epsilon(1e-15));
  // A hair above the integer still counts as the integer ...
  const double eps_w = 1e-12;
  CHECK(q_statistic(1.0, eps_w, 10.0) == q_statistic(1.0, 0.0, 10.0));
  // ... but a genuine fraction moves to the next one.
  CHECK(q_statistic(1.0, 0.5 / std::sqrt(10.0), 10.0) ==
        doctest::Approx(poisson_tail(10.0, 11, TailSide::kAtLeast))
            .epsilon(1e-15));
}

TEST_CASE("Gaussian limit of the window statistic at large mean") {
  // |Q - G| <= 10 mu^{-1/4} G over the probe grid; the worst measured
  // relative deviations are 0.075 (mu = 100), 0.0084 (mu = 1000) and
  // 0.0138 (mu = 10000), far inside the envelope.
  for (double mu : {100.0, 1000.0, 10000.0}) {
    const double env = 10.0 * std::pow(mu, -0.25);
    for (double t : {0.0, 0.5, 1.0, std::pow(mu, 1.0 / 12.0)}) {
      const double q = q_statistic(mu, t, 1.0);
      const double g = gaussian_tail(t);
      CHECK(std::abs(q - g) <= env * g);
    }
  }
}

TEST_CASE("binomial pmf handles the degenerate probabilities") {
  CHECK(log_binomial_pmf(0, 10, 0.0) == 0.0);
  CHECK(log_binomial_pmf(1, 10, 0.0) ==
        -std::numeric_limits<double>::infinity());
  CHECK(log_binomial_pmf(10, 10, 1.0) == 0.0);
  CHECK(log_binomial_pmf(9, 10, 1.0) ==
        -std::numeric_limits<double>::infinity());
  CHECK(log_binomial_pmf(-1, 10, 0.5) ==
        -std::numeric_limits<double>::infinity());
  CHECK(log_binomial_pmf(11, 10, 0.5) ==
        -std::numeric_limits<double>::infinity());
  // Row of Pascal's triangle: C(5, 2) / 2^5 = 10/32.
  CHECK(std::exp(log_binomial_pmf(2, 5, 0.5)) ==
        doctest::Approx(10.0 / 32.0).epsilon(1e-13));
}

TEST_CASE("binomial pmf tracks the Poisson pmf in the sparse regime") {
  const struct {
    long long n;
    double p;
    long long v;
    double ratio;
  } rows[] = {
      // Reference ratios from an independent high-precision evaluation.
      {1000000, 1e-5, 10, 1.00000499929},
      {10000, 1e-2, 100, 1.00503773067},
      {10000, 1e-2, 0, 0.604497022188},
      {1000000, 1e-5, 31, 0.999795016926},
  };
  for (const auto& r : rows) {
    const BinomialPoissonReport rep = binomial_poisson_check(r.n, r.p, r.v);
    CHECK(rep.ratio == doctest::Approx(r.ratio).epsilon(1e-7));
    CHECK(rep.envelope ==
          doctest::Approx(1.0 + 5.0 * (static_cast<double>(r.v) *
                                           static_cast<double>(r.v) /
                                           static_cast<double>(r.n) +
                                       r.p * r.p * static_cast<double>(r.n)))
              .epsilon(1e-12));
    CHECK(std::max(rep.ratio, 1.0 / rep.ratio) <= rep.envelope);
  }
  // Exact agreement when the binomial degenerates to a point mass at 0.
  const BinomialPoissonReport z = binomial_poisson_check(100, 0.0, 0);
  CHECK(z.ratio == doctest::Approx(1.0).epsilon(1e-15));

  CHECK_THROWS_AS((void)binomial_poisson_check(0, 0.5, 0), std::domain_error);
  CHECK_THROWS_AS((void)binomial_poisson_check(100, 0.5, 0),
                  std::domain_error);
  CHECK_THROWS_AS((void)binomial_poisson_check(100, 1e-3, 11),
                  std::domain_error);
  CHECK_THROWS_AS((void)binomial_poisson_check(100, 1e-3, -1),
                  std::domain_error);
}

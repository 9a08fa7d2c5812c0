#include "spedge/experiments.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "spedge/prob_approx.hpp"

namespace spedge {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

long long count_at_least(const EdgeProcess& p, double s) {
  return static_cast<long long>(
      p.points.end() -
      std::lower_bound(p.points.begin(), p.points.end(), s));
}

// Index of the flat point among the top eigenvalues, or size() when no
// overlap reaches the threshold.
std::size_t flat_index(const EdgeEigen& eigen, double overlap_min) {
  if (eigen.flat_overlap.empty()) return eigen.values.size();
  std::size_t best = 0;
  for (std::size_t i = 1; i < eigen.flat_overlap.size(); ++i)
    if (eigen.flat_overlap[i] > eigen.flat_overlap[best]) best = i;
  return eigen.flat_overlap[best] >= overlap_min ? best : eigen.values.size();
}

// Shared window scan for the two reference processes.
template <typename PointOf>
EdgeProcess build_reference(const GraphSample& g, const ScaleParams& params,
                            double q, ProcessKind kind, PointOf&& point_of) {
  if (!(q > 0.0))
    throw std::domain_error("build_sigma: need a positive degree window q");
  if (g.N < 1) throw std::domain_error("build_sigma: empty graph");
  EdgeProcess p;
  p.kind = kind;
  p.params = params;
  const double lo = params.u_frak - q;
  const double hi = params.u_frak + q;
  std::vector<std::pair<double, std::uint32_t>> pts;
  for (std::uint32_t x = 0; x < static_cast<std::uint64_t>(g.N); ++x) {
    const double alpha = static_cast<double>(g.degrees[x]) / params.d;
    if (alpha < lo || alpha > hi) {
      ++p.graveyard;
      continue;
    }
    const VertexProfile prof = vertex_profile(g, x, 2);
    if (!prof.beta_defined) {
      ++p.graveyard;
      continue;
    }
    const double z = point_of(prof);
    if (std::isnan(z)) {
      ++p.graveyard;
      continue;
    }
    pts.emplace_back(z, x);
  }
  std::sort(pts.begin(), pts.end());
  p.points.reserve(pts.size());
  p.labels.reserve(pts.size());
  for (const auto& [z, x] : pts) {
    p.points.push_back(z);
    p.labels.push_back(x);
  }
  return p;
}

}  // namespace

double spectral_window_chi(const ScaleParams& params, double gamma) {
  const double u = params.u_frak;
  return (u - 2.0) * std::pow(params.d, 2.0 * gamma - 1.0) /
         (std::pow(u, 1.5) * std::log(u));
}

double eta_error(const ScaleParams& params, double gamma, double epsilon) {
  const double u = params.u_frak;
  return std::pow(params.d, 3.0 * gamma + 0.5 * epsilon - 0.5) *
         std::pow(u / (u - 2.0), 5.0);
}

EdgeProcess build_phi(const EdgeEigen& eigen, const ScaleParams& params,
                      bool exclude_stray, double window_lo,
                      double overlap_min) {
  if (eigen.values.empty())
    throw std::domain_error("build_phi: no top eigenvalues present");
  const double dt = params.d * params.tau;
  if (std::isnan(window_lo))
    window_lo = -dt * 0.5 * spectral_window_chi(params, 0.125);

  EdgeProcess p;
  p.kind = ProcessKind::kPhi;
  p.params = params;
  std::size_t skip = eigen.values.size();
  if (exclude_stray) {
    skip = flat_index(eigen, overlap_min);
    if (skip < eigen.values.size()) {
      p.stray_excluded = true;
      p.stray_point = dt * (eigen.values[skip] - params.sigma);
    }
  }
  for (std::size_t i = 0; i < eigen.values.size(); ++i) {
    if (i == skip) continue;
    p.points.push_back(dt * (eigen.values[i] - params.sigma));
  }
  std::sort(p.points.begin(), p.points.end());

  // Coverage: with a floor-based solve, trust the floor (its user puts it at
  // or below the window edge) unless the emission cap cut points off; in a
  // plain top-k solve the smallest computed point must clear the edge.
  if (eigen.floor_count >= 0) {
    p.coverage_warning =
        eigen.floor_count > static_cast<int>(eigen.values.size());
  } else {
    p.coverage_warning = p.points.empty() || p.points.front() > window_lo;
  }
  return p;
}

EdgeProcess build_sigma(const GraphSample& g, const ScaleParams& params,
                        double q) {
  const double theta = params.theta;
  const double d = params.d;
  const double du = d * params.u_frak;
  return build_reference(
      g, params, q, ProcessKind::kSigma, [&](const VertexProfile& prof) {
        return theta * (d * prof.alpha - du) +
               d * std::sqrt(prof.alpha) * (prof.beta - 1.0);
      });
}

EdgeProcess build_sigma_tilde(const GraphSample& g, const ScaleParams& params,
                              double q) {
  const double dt = params.d * params.tau;
  const double d = params.d;
  const double sigma = params.sigma;
  return build_reference(
      g, params, q, ProcessKind::kSigmaTilde, [&](const VertexProfile& prof) {
        const double lam = lambda_d_extended(prof.alpha, prof.beta, d);
        return std::isnan(lam) ? kNaN : dt * (lam - sigma);
      });
}

MatchReport match_rigidity(const EdgeProcess& phi,
                           const EdgeProcess& sigma_tilde, double chi_scaled,
                           double gap_tol) {
  if (!(chi_scaled > 0.0))
    throw std::domain_error("match_rigidity: need chi_scaled > 0");
  if (!(gap_tol >= 0.0))
    throw std::domain_error("match_rigidity: need gap_tol >= 0");
  MatchReport rep;
  rep.window_lo = -chi_scaled;
  rep.gap_tol = gap_tol;

  std::vector<double> eig;
  for (double v : phi.points)
    if (v >= rep.window_lo) eig.push_back(v);

  struct Cand {
    double z;
    std::uint32_t label;
    bool used;
  };
  std::vector<Cand> cand;
  for (std::size_t i = 0; i < sigma_tilde.points.size(); ++i) {
    if (sigma_tilde.points[i] < rep.window_lo) continue;
    const std::uint32_t lab =
        i < sigma_tilde.labels.size() ? sigma_tilde.labels[i] : 0;
    cand.push_back({sigma_tilde.points[i], lab, false});
  }

  // Largest eigenvalue point first; nearest free predictor, ties to the
  // larger predictor value.
  for (auto it = eig.rbegin(); it != eig.rend(); ++it) {
    const double v = *it;
    int best = -1;
    for (int j = 0; j < static_cast<int>(cand.size()); ++j) {
      if (cand[j].used) continue;
      if (best < 0) {
        best = j;
        continue;
      }
      const double dj = std::abs(cand[j].z - v);
      const double db = std::abs(cand[best].z - v);
      if (dj < db || (dj == db && cand[j].z > cand[best].z)) best = j;
    }
    if (best < 0) {
      rep.unmatched_eigen.push_back(v);
      continue;
    }
    cand[best].used = true;
    MatchPair mp;
    mp.eigen_point = v;
    mp.pred_point = cand[best].z;
    mp.gap = std::abs(cand[best].z - v);
    mp.label = cand[best].label;
    rep.max_gap = std::max(rep.max_gap, mp.gap);
    rep.pairs.push_back(mp);
  }
  for (const Cand& c : cand)
    if (!c.used) rep.unmatched_pred.push_back(c.z);

  rep.exact_match = rep.unmatched_eigen.empty() &&
                    rep.unmatched_pred.empty() && rep.max_gap <= gap_tol;
  return rep;
}

PoissonStats poisson_tests(const std::vector<EdgeProcess>& processes,
                           const IntensityCurve& curve,
                           const std::vector<IntervalSpec>& intervals,
                           double kappa) {
  const int m = static_cast<int>(processes.size());
  if (m < 50)
    throw std::domain_error("poisson_tests: need at least 50 seeds");
  PoissonStats st;
  st.n_seeds = m;
  st.low_sample = m < 100;
  st.kappa = kappa;

  for (const IntervalSpec& iv : intervals) {
    if (!(iv.lo < iv.hi))
      throw std::domain_error("poisson_tests: interval must have lo < hi");
    IntervalStat is;
    is.lo = iv.lo;
    is.hi = iv.hi;
    const double tail_hi = std::isfinite(iv.hi) ? rho_tail(curve, iv.hi) : 0.0;
    is.mass = rho_tail(curve, iv.lo) - tail_hi;

    long long max_count = 0;
    std::vector<long long> counts(processes.size());
    for (std::size_t i = 0; i < processes.size(); ++i) {
      const long long hi_cnt =
          std::isfinite(iv.hi) ? count_at_least(processes[i], iv.hi) : 0;
      counts[i] = count_at_least(processes[i], iv.lo) - hi_cnt;
      max_count = std::max(max_count, counts[i]);
      is.total_points += counts[i];
    }
    is.histogram.assign(static_cast<std::size_t>(max_count) + 1, 0);
    for (long long c : counts) ++is.histogram[static_cast<std::size_t>(c)];

    if (is.mass <= 0.0) {
      // Zero predicted mass: any observed point is an outright deviation.
      is.chi2 = is.total_points == 0 ? 0.0 : kInf;
      is.dof = 0;
      is.p_value = is.total_points == 0 ? 1.0 : 0.0;
    } else {
      // Group consecutive counts until each group expects at least 5.
      const long long jcap = std::max<long long>(
          max_count, static_cast<long long>(
                         std::ceil(is.mass + 10.0 * std::sqrt(is.mass))) +
                         10);
      std::vector<double> expected;
      std::vector<long long> observed;
      double cur_e = 0.0;
      long long cur_o = 0;
      double tail_left = static_cast<double>(m);  // expected mass not yet used
      for (long long j = 0; j <= jcap; ++j) {
        const double ej =
            j < jcap
                ? static_cast<double>(m) * poisson_pmf(j, is.mass)
                : tail_left;  // last cell absorbs the whole remaining tail
        tail_left -= j < jcap ? ej : tail_left;
        cur_e += ej;
        cur_o +=
            j <= max_count ? is.histogram[static_cast<std::size_t>(j)] : 0;
        if (cur_e >= 5.0 || j == jcap) {
          expected.push_back(cur_e);
          observed.push_back(cur_o);
          cur_e = 0.0;
          cur_o = 0;
        }
      }
      if (expected.size() >= 2 && expected.back() < 5.0) {
        expected[expected.size() - 2] += expected.back();
        observed[observed.size() - 2] += observed.back();
        expected.pop_back();
        observed.pop_back();
      }
      is.dof = static_cast<int>(expected.size()) - 1;
      for (std::size_t gidx = 0; gidx < expected.size(); ++gidx) {
        const double diff =
            static_cast<double>(observed[gidx]) - expected[gidx];
        is.chi2 += diff * diff / expected[gidx];
      }
      if (is.dof <= 0) {
        is.p_value = 1.0;
      } else {
        boost::math::chi_squared dist(static_cast<double>(is.dof));
        is.p_value = boost::math::cdf(boost::math::complement(dist, is.chi2));
      }
    }
    st.intervals.push_back(std::move(is));
  }

  // One-sample KS of the per-seed maximum against exp(-rho([s, inf))).
  std::vector<double> tops;
  tops.reserve(processes.size());
  for (const EdgeProcess& p : processes) {
    if (p.points.empty())
      throw std::domain_error("poisson_tests: a seed has an empty process");
    tops.push_back(p.points.back());
  }
  std::sort(tops.begin(), tops.end());
  st.ks_n = m;
  for (int i = 0; i < m; ++i) {
    const double fx = std::exp(-rho_tail(curve, tops[static_cast<std::size_t>(i)]));
    const double up = static_cast<double>(i + 1) / m - fx;
    const double dn = fx - static_cast<double>(i) / m;
    st.ks_distance = std::max({st.ks_distance, up, dn});
  }

  // Joint counting distance on a grid over [-kappa, kappa], truncated at
  // event depth two with the 1/2, 1/4 metric weights.
  const int ns = 9;
  const int nk = 6;
  const double width = kappa > 0.0 ? 2.0 * kappa : 2.0;
  std::vector<double> sgrid(ns);
  std::vector<double> masses(ns);
  for (int j = 0; j < ns; ++j) {
    sgrid[j] = -kappa + width * j / (ns - 1);
    masses[j] = rho_tail(curve, sgrid[j]);
  }
  std::vector<std::vector<long long>> cnt(
      processes.size(), std::vector<long long>(ns));
  for (std::size_t i = 0; i < processes.size(); ++i)
    for (int j = 0; j < ns; ++j)
      cnt[i][j] = count_at_least(processes[i], sgrid[j]);

  double sup1 = 0.0;
  for (int j = 0; j < ns; ++j) {
    for (int k = 1; k <= nk; ++k) {
      long long hits = 0;
      for (const auto& ci : cnt) hits += ci[j] >= k ? 1 : 0;
      const double emp = static_cast<double>(hits) / m;
      const double theo = poisson_tail(masses[j], k, TailSide::kAtLeast);
      sup1 = std::max(sup1, std::abs(emp - theo));
    }
  }

  // P(count(E_{s1}) >= k1, count(E_{s2}) >= k2) for s1 <= s2 under the
  // Poisson law: split into the independent increment on [s1, s2) and the
  // tail beyond s2.
  auto joint_poisson = [](double mass1, double mass2, int k1, int k2) {
    const double inc = std::max(0.0, mass1 - mass2);
    double acc = 0.0;
    for (long long y = k2; y <= k2 + 80; ++y) {
      const double py = poisson_pmf(y, mass2);
      const long long need = k1 - y;
      acc += py * (need <= 0
                       ? 1.0
                       : poisson_tail(inc, need, TailSide::kAtLeast));
    }
    return acc;
  };
  double sup2 = 0.0;
  for (int j1 = 0; j1 < ns; ++j1) {
    for (int j2 = j1; j2 < ns; ++j2) {
      for (int k1 = 1; k1 <= nk; ++k1) {
        for (int k2 = 1; k2 <= nk; ++k2) {
          long long hits = 0;
          for (const auto& ci : cnt)
            hits += (ci[j1] >= k1 && ci[j2] >= k2) ? 1 : 0;
          const double emp = static_cast<double>(hits) / m;
          const double theo =
              j1 == j2 ? poisson_tail(masses[j1], std::max(k1, k2),
                                      TailSide::kAtLeast)
                       : joint_poisson(masses[j1], masses[j2], k1, k2);
          sup2 = std::max(sup2, std::abs(emp - theo));
        }
      }
    }
  }
  st.d_kappa_pairs = 0.5 * sup1 + 0.25 * sup2;
  return st;
}

double symmetry_check(const EdgeEigen& eigen, int n_pairs, bool exclude_stray,
                      double overlap_min) {
  if (eigen.values.empty() || eigen.bottom_values.empty())
    throw std::domain_error("symmetry_check: need both spectral ends");
  std::vector<double> top = eigen.values;
  if (exclude_stray) {
    const std::size_t skip = flat_index(eigen, overlap_min);
    if (skip < top.size())
      top.erase(top.begin() + static_cast<std::ptrdiff_t>(skip));
  }
  const int avail =
      static_cast<int>(std::min(top.size(), eigen.bottom_values.size()));
  const int pairs = n_pairs <= 0 ? avail : std::min(n_pairs, avail);
  if (pairs <= 0)
    throw std::domain_error("symmetry_check: no pairs available");
  double mx = 0.0;
  for (int j = 0; j < pairs; ++j)
    mx = std::max(mx, std::abs(top[static_cast<std::size_t>(j)] +
                               eigen.bottom_values[static_cast<std::size_t>(j)]));
  return mx;
}

SandwichReport sigma_phi_check(const EdgeProcess& phi,
                               const EdgeProcess& sigma, double eta,
                               double s_lo, double s_hi, int n_grid) {
  if (n_grid < 2)
    throw std::domain_error("sigma_phi_check: need at least 2 grid levels");
  if (!(eta >= 0.0))
    throw std::domain_error("sigma_phi_check: need eta >= 0");
  if (!(s_lo <= s_hi))
    throw std::domain_error("sigma_phi_check: need s_lo <= s_hi");
  SandwichReport rep;
  rep.n_grid = n_grid;
  rep.eta = eta;
  for (int i = 0; i < n_grid; ++i) {
    const double s = s_lo + (s_hi - s_lo) * i / (n_grid - 1);
    const long long ph = count_at_least(phi, s);
    const long long lo = count_at_least(sigma, s + eta);
    const long long hi = count_at_least(sigma, s - eta);
    if (!(lo <= ph && ph <= hi)) ++rep.violations;
  }
  return rep;
}

double min_spacing_above(const EdgeProcess& p, double s_lo) {
  auto it = std::lower_bound(p.points.begin(), p.points.end(), s_lo);
  if (p.points.end() - it < 2) return kInf;
  double best = kInf;
  for (auto j = it + 1; j != p.points.end(); ++j)
    best = std::min(best, *j - *(j - 1));
  return best;
}

// ---------------------------------------------------------------------------
// Drivers.

std::vector<RigidityRow> run_rigidity(long long N, double d,
                                      std::uint64_t seed0, int n_seeds,
                                      const Calib& calib,
                                      RigidityAggregate* agg) {
  if (n_seeds < 1)
    throw std::domain_error("run_rigidity: need n_seeds >= 1");
  const ScaleParams params = solve_scale_params(N, d);
  const IntensityCurve curve = make_intensity_curve(params);
  const double kappa = solve_kappa(curve, calib.kappa_K).kappa;
  const double dt = params.d * params.tau;
  const double chi_scaled =
      dt * calib.specmax_c * spectral_window_chi(params, calib.gamma);
  const double q =
      calib.rho_tilde_q_mult * std::pow(d, 2.0 * calib.gamma - 1.0);
  const double eta = eta_error(params, calib.gamma, calib.eta_epsilon);
  const double q_loc = calib.loc_q_num / params.sigma;
  const int r_choice = choice_radius(params.a_frak, d, calib.choice_r_c);
  // The statistics need the flat pair plus the top three point-process pairs
  // at each end; deeper ranks sink into the near-degenerate cluster at the
  // bulk edge, where certifying pairs costs Krylov dimension for nothing.
  constexpr int kPairs = 6;
  constexpr int kGrid = 21;

  std::vector<RigidityRow> rows;
  rows.reserve(static_cast<std::size_t>(n_seeds));
  for (int i = 0; i < n_seeds; ++i) {
    RigidityRow row;
    row.seed = seed0 + static_cast<std::uint64_t>(i);
    const GraphSample g = sample_er(N, d, row.seed);

    LanczosOptions opt;
    opt.which = WhichEnd::kBoth;
    opt.want_vectors = true;
    opt.max_m = calib.lanczos_max_m;
    opt.tol = calib.lanczos_tol;
    const EdgeEigen eig = top_k_eigenpairs(g, kPairs, opt);
    row.lambda1 = eig.values.front();

    const StrayReport sr = stray_estimate(g, eig, calib.stray_overlap_min);
    row.stray_separated = sr.separated;

    const EdgeProcess phi =
        build_phi(eig, params, true, -kappa, calib.stray_overlap_min);
    row.lambda1_nonstray =
        phi.points.empty() ? kNaN : params.sigma + phi.points.back() / dt;

    const VertexClasses cls =
        classify_vertices(g, params, calib.gamma, calib.c_star);
    row.w_count = static_cast<int>(cls.W.size());
    double best = -kInf;
    std::uint32_t best_x = 0;
    for (std::uint32_t x : cls.W) {
      const VertexProfile prof = vertex_profile(g, x, 2);
      if (!prof.beta_defined) continue;
      const double lam = lambda_d_extended(prof.alpha, prof.beta, d);
      if (std::isnan(lam) || lam <= best) continue;
      best = lam;
      best_x = x;
    }

    if (std::isfinite(best)) {
      row.pred_max = best;
      row.pred_vertex = best_x;
      row.match_err = std::abs(row.lambda1_nonstray - best);

      // Ball solve: the pruning radius, then shrink so the solve ball
      // B_{r+1} itself respects the half-graph cap.
      const int r_cap = clamp_radius_by_ball(g, best_x, r_choice);
      row.ball_radius = std::max(1, r_cap - 1);
      const RestrictedPair rp =
          restricted_eigenpair(g, best_x, row.ball_radius, +1);
      row.mu_ball = rp.mu;
      row.mu_err_pred = std::abs(rp.mu - best);
      row.mu_err_global = std::abs(rp.mu - row.lambda1_nonstray);

      // Localization of the top non-flat eigenvector around the predictor
      // argmax.
      const std::size_t skip = flat_index(eig, calib.stray_overlap_min);
      const std::size_t jtop = skip == 0 ? 1 : 0;
      if (jtop < eig.vectors.size()) {
        const LocalizationProfile lp = localization_profile(
            g, eig.vectors[jtop], best_x, 4, params.sigma);
        row.out_mass = lp.out_mass;
        row.radial_residual = lp.radial_residual;
        double margin = -kInf;
        const double den = (1.0 - q_loc) * (1.0 - q_loc);
        for (std::size_t ri = 0; ri < lp.out_mass.size(); ++ri) {
          const double env =
              den > 0.0
                  ? std::pow(q_loc, static_cast<double>(ri)) / den +
                        calib.loc_slack
                  : kInf;
          margin = std::max(margin, lp.out_mass[ri] - env);
        }
        row.loc_margin = margin;
      } else {
        row.radial_residual = kNaN;
        row.loc_margin = kNaN;
      }
    } else {
      row.match_err = kNaN;
      row.mu_err_pred = kNaN;
      row.mu_err_global = kNaN;
      row.loc_margin = kNaN;
      row.radial_residual = kNaN;
    }

    row.max_sym = symmetry_check(eig, 3, true, calib.stray_overlap_min);

    const EdgeProcess sig = build_sigma(g, params, q);
    const EdgeProcess sit = build_sigma_tilde(g, params, q);
    const MatchReport mr =
        match_rigidity(phi, sit, chi_scaled, calib.match_tol);
    row.exact_match = mr.exact_match;
    row.max_gap = mr.max_gap;

    row.sandwich_violations =
        sigma_phi_check(phi, sig, eta, -kappa, kappa, kGrid).violations;
    row.sandwich_violations_test =
        sigma_phi_check(phi, sig, calib.eta_test, -kappa, kappa, kGrid)
            .violations;
    row.min_sigma_spacing = min_spacing_above(sig, -kappa);
    rows.push_back(std::move(row));
  }

  if (agg != nullptr) {
    RigidityAggregate a;
    a.n_seeds = n_seeds;
    const double inv = 1.0 / n_seeds;
    for (const RigidityRow& row : rows) {
      a.frac_match += row.match_err <= calib.match_tol ? inv : 0.0;
      a.frac_ball_pred += row.mu_err_pred <= calib.restricted_tol ? inv : 0.0;
      a.frac_ball_global +=
          row.mu_err_global <= calib.restricted_tol ? inv : 0.0;
      a.frac_exact += row.exact_match ? inv : 0.0;
      a.frac_sym += row.max_sym <= 0.01 ? inv : 0.0;
      a.frac_loc += row.loc_margin <= 0.0 ? inv : 0.0;
      a.frac_radial += row.radial_residual <= 0.2 ? inv : 0.0;
      a.frac_sandwich += row.sandwich_violations == 0 ? inv : 0.0;
      a.frac_close_pair += row.min_sigma_spacing < calib.eta_test ? inv : 0.0;
    }
    *agg = a;
  }
  return rows;
}

std::vector<StrayRow> run_stray(long long N, double d, std::uint64_t seed0,
                                int n_seeds, const Calib& calib,
                                StrayAggregate* agg) {
  if (n_seeds < 1) throw std::domain_error("run_stray: need n_seeds >= 1");
  const double pred = stray_location(d);

  std::vector<StrayRow> rows;
  rows.reserve(static_cast<std::size_t>(n_seeds));
  for (int i = 0; i < n_seeds; ++i) {
    StrayRow row;
    row.seed = seed0 + static_cast<std::uint64_t>(i);
    const GraphSample g = sample_er(N, d, row.seed);
    LanczosOptions opt;
    opt.which = WhichEnd::kTop;
    opt.want_vectors = false;
    opt.max_m = calib.lanczos_max_m;
    opt.tol = calib.lanczos_tol;
    const EdgeEigen eig = top_k_eigenpairs(g, 1, opt);
    const StrayReport sr = stray_estimate(g, eig, calib.stray_overlap_min);
    row.nu_hat = sr.nu_hat;
    row.overlap = sr.overlap;
    row.abs_err = std::abs(sr.nu_hat - pred);
    row.separated = sr.separated;
    rows.push_back(row);
  }

  if (agg != nullptr) {
    StrayAggregate a;
    a.n_seeds = n_seeds;
    a.predictor = pred;
    std::vector<double> errs, ovls;
    for (const StrayRow& row : rows) {
      errs.push_back(row.abs_err);
      ovls.push_back(row.overlap);
      a.n_separated += row.separated ? 1 : 0;
    }
    auto median = [](std::vector<double>& v) {
      std::sort(v.begin(), v.end());
      const std::size_t n = v.size();
      return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };
    a.median_err = median(errs);
    a.median_overlap = median(ovls);
    *agg = a;
  }
  return rows;
}

PoissonRunResult run_poisson(long long N, double d, std::uint64_t seed0,
                             int n_seeds, int k_window, const Calib& calib) {
  if (n_seeds < 1) throw std::domain_error("run_poisson: need n_seeds >= 1");
  if (k_window < 2 || k_window > 32)
    throw std::domain_error("run_poisson: k_window must be in [2, 32]");
  const ScaleParams params = solve_scale_params(N, d);
  const IntensityCurve curve = make_intensity_curve(params);

  PoissonRunResult res;
  res.kappa = solve_kappa(curve, calib.kappa_K).kappa;
  // Certify half a rescaled unit below the window edge, so every point the
  // statistics can see is guaranteed present.
  res.floor_rescaled = -(res.kappa + 0.5);
  const double dt = params.d * params.tau;
  const double floor_lambda = params.sigma + res.floor_rescaled / dt;

  // Three disjoint intervals splitting the tail at masses 3.5 / 1.5 / 0.5
  // (interval masses 2, 1 and 0.5).
  const double t_a = -solve_kappa(curve, 3.5).kappa;
  const double t_b = -solve_kappa(curve, 1.5).kappa;
  const double t_c = -solve_kappa(curve, 0.5).kappa;
  res.intervals = {{t_a, t_b}, {t_b, t_c}, {t_c, kInf}};

  res.processes.reserve(static_cast<std::size_t>(n_seeds));
  for (int i = 0; i < n_seeds; ++i) {
    const std::uint64_t seed = seed0 + static_cast<std::uint64_t>(i);
    const GraphSample g = sample_er(N, d, seed);
    LanczosOptions opt;
    opt.which = WhichEnd::kTop;
    opt.want_vectors = false;
    opt.max_m = calib.lanczos_max_m;
    opt.tol = calib.lanczos_tol;
    opt.value_floor = floor_lambda;
    opt.min_top = 2;
    const EdgeEigen eig = top_k_eigenpairs(g, k_window, opt);
    EdgeProcess phi =
        build_phi(eig, params, true, -res.kappa, calib.stray_overlap_min);
    if (phi.coverage_warning) ++res.n_coverage_warnings;
    res.processes.push_back(std::move(phi));
  }
  res.stats = poisson_tests(res.processes, curve, res.intervals, res.kappa);
  return res;
}

std::vector<TreeBasisRow> run_tree_basis(long long N, double d, int r,
                                         int n_samples, std::uint64_t seed0,
                                         const Calib& calib,
                                         TreeBasisAggregate* agg) {
  if (n_samples < 1)
    throw std::domain_error("run_tree_basis: need n_samples >= 1");
  if (r < 2) throw std::domain_error("run_tree_basis: need r >= 2");
  const ScaleParams params = solve_scale_params(N, d);
  const double w_cut =
      params.a_frak - calib.c_star *
                          std::pow(d, 2.0 * calib.gamma - 1.0) /
                          std::log(params.a_frak);
  const long long min_deg =
      std::max<long long>(1, static_cast<long long>(std::ceil(d * w_cut)));
  const double mz_env =
      calib.env_m_z * r * r * std::pow(d, -1.5 + 3.0 * calib.gamma);

  std::vector<TreeBasisRow> rows;
  rows.reserve(static_cast<std::size_t>(n_samples));
  for (int i = 0; i < n_samples; ++i) {
    TreeBasisRow row;
    row.seed = seed0 + static_cast<std::uint64_t>(i);
    const GraphSample tb = sample_tree_ball(N, d, r + 1, min_deg, row.seed);
    row.ball_size = static_cast<std::uint64_t>(tb.N);
    const TridiagBasis basis = build_tridiag_basis(tb, 0, r);
    const BasisIdentityReport rep =
        verify_basis_identities(basis, calib.gamma, calib.env_g_norm);
    row.identity_dev = rep.max_identity_dev;
    row.dual_route_dev = rep.max_dual_route_dev;
    row.low_g = rep.max_low_g;
    row.f_g_inner = rep.max_f_g_inner;
    row.orthogonality = rep.max_orthogonality;
    row.supp_ok = rep.supp_ok;
    for (double ratio : rep.g_envelope_ratio)
      row.g_env_max = std::max(row.g_env_max, ratio);
    const double sa = std::sqrt(basis.alpha_x);
    const double sb = std::sqrt(basis.beta_x);
    row.m01_rel = std::abs(basis.m_offdiag[0] - sa) / sa;
    row.m12_rel = std::abs(basis.m_offdiag[1] - sb) / sb;
    row.mz_dev = compare_M_Z(basis, d);
    rows.push_back(std::move(row));
  }

  if (agg != nullptr) {
    TreeBasisAggregate a;
    a.n_samples = n_samples;
    const double inv = 1.0 / n_samples;
    for (const TreeBasisRow& row : rows) {
      a.max_identity_dev = std::max(a.max_identity_dev, row.identity_dev);
      a.max_dual_route_dev =
          std::max(a.max_dual_route_dev, row.dual_route_dev);
      a.max_low_g = std::max(a.max_low_g, row.low_g);
      a.max_f_g_inner = std::max(a.max_f_g_inner, row.f_g_inner);
      a.max_orthogonality = std::max(a.max_orthogonality, row.orthogonality);
      a.max_m01_rel = std::max(a.max_m01_rel, row.m01_rel);
      a.max_m12_rel = std::max(a.max_m12_rel, row.m12_rel);
      a.all_supp_ok = a.all_supp_ok && row.supp_ok;
      a.frac_mz += row.mz_dev <= mz_env ? inv : 0.0;
      a.max_g_env = std::max(a.max_g_env, row.g_env_max);
    }
    *agg = a;
  }
  return rows;
}

}  // namespace spedge

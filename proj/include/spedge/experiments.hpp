#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "spedge/config.hpp"
#include "spedge/graph.hpp"
#include "spedge/intensity.hpp"
#include "spedge/scalar_theory.hpp"
#include "spedge/spectra.hpp"

// Monte Carlo layer: rescaled edge point processes (eigenvalues, degree
// statistics, closed-form predictors), rigidity matching between them,
// Poisson/counting statistics across seeds, two-sided symmetry checks and
// localization audits, plus the per-experiment drivers used by the CLI.

namespace spedge {

enum class ProcessKind { kPhi, kSigma, kSigmaTilde };

// A point process on the rescaled spectral axis. Points are kept sorted
// ascending; entries that fall outside the window of interest (or whose
// defining statistic is undefined) are dropped but counted in `graveyard`.
// For the predictor processes, `labels` carries the vertex id of each point.
struct EdgeProcess {
  ProcessKind kind = ProcessKind::kPhi;
  std::vector<double> points;
  std::vector<std::uint32_t> labels;
  std::size_t graveyard = 0;
  ScaleParams params;
  // Eigenvalue process only: the solver may not have certified every
  // eigenvalue down to the requested window edge.
  bool coverage_warning = false;
  bool stray_excluded = false;        // one flat point was removed
  double stray_point =
      std::numeric_limits<double>::quiet_NaN();  // its rescaled value
};

// Rescaled eigenvalue process: one point d tau (lambda - sigma) per computed
// top eigenvalue. With exclude_stray the single eigenvalue of maximal flat
// overlap is removed, provided that overlap reaches overlap_min; otherwise
// the process is returned unmodified with stray_excluded = false.
// window_lo is the left edge (rescaled) the caller wants covered: a warning
// flag is raised when the computed set provably may not reach it. Passing
// NaN selects the default spectral window -d tau c chi with c = 0.5 and
// gamma = 1/8.
EdgeProcess build_phi(const EdgeEigen& eigen, const ScaleParams& params,
                      bool exclude_stray,
                      double window_lo = std::numeric_limits<double>::quiet_NaN(),
                      double overlap_min = 0.5);

// Degree-statistic reference process: for every vertex with |alpha_x - u| <= q
// one point Z_x = theta(u) (d alpha_x - d u) + d sqrt(alpha_x) (beta_x - 1);
// all other vertices land in the graveyard.
EdgeProcess build_sigma(const GraphSample& g, const ScaleParams& params,
                        double q);

// Predictor reference process: d tau (Lambda_d(alpha_x, beta_x) - sigma) over
// the same degree window, with points whose predictor is undefined (outside
// the extended domain) sent to the graveyard.
EdgeProcess build_sigma_tilde(const GraphSample& g, const ScaleParams& params,
                              double q);

struct MatchPair {
  double eigen_point = 0.0;
  double pred_point = 0.0;
  double gap = 0.0;
  std::uint32_t label = 0;  // vertex id of the predictor point
};

struct MatchReport {
  double window_lo = 0.0;  // rescaled left edge of the matching window
  double gap_tol = 0.0;
  std::vector<MatchPair> pairs;
  std::vector<double> unmatched_eigen;
  std::vector<double> unmatched_pred;
  double max_gap = 0.0;      // over matched pairs; 0 when none
  bool exact_match = false;  // counts agree and every gap <= gap_tol
};

// Greedy nearest-neighbour matching of the two processes inside the window
// [-chi_scaled, inf), walking the eigenvalue points from the largest down;
// ties between predictor candidates go to the larger one.
MatchReport match_rigidity(const EdgeProcess& phi,
                           const EdgeProcess& sigma_tilde, double chi_scaled,
                           double gap_tol = 0.1);

struct IntervalSpec {
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
};

struct IntervalStat {
  double lo = 0.0;
  double hi = 0.0;
  double mass = 0.0;                  // rho(lo) - rho(hi)
  std::vector<long long> histogram;   // seeds with j points, j = 0, 1, ...
  long long total_points = 0;
  double chi2 = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

struct PoissonStats {
  int n_seeds = 0;
  bool low_sample = false;  // fewer than 100 seeds
  std::vector<IntervalStat> intervals;
  double ks_distance = 0.0;  // largest point vs exp(-rho([s, inf)))
  int ks_n = 0;
  // Joint counting-distance estimate, truncated at event depth 2 and probed
  // on a finite (s, k) grid over [-kappa, kappa]; a lower bound on the full
  // metric up to the 2^{-n} tail weight.
  double d_kappa_pairs = 0.0;
  double kappa = 0.0;
};

// Counting statistics of the eigenvalue process across seeds against the
// Poisson law with the given intensity: per-interval count histograms with a
// chi-square test, the KS distance of the per-seed maximum against its limit
// law, and the grid estimate of the joint counting distance. Throws
// std::domain_error below 50 seeds, flags low_sample below 100.
PoissonStats poisson_tests(const std::vector<EdgeProcess>& processes,
                           const IntensityCurve& curve,
                           const std::vector<IntervalSpec>& intervals,
                           double kappa);

// Max |lambda_j + lambda'_j| over the first n_pairs, pairing the j-th largest
// with the j-th smallest eigenvalue. n_pairs = 0 pairs as deep as both ends
// allow. With exclude_stray the single flat-overlap eigenvalue is skipped on
// the top side before pairing (it has no mirror at the bottom edge).
double symmetry_check(const EdgeEigen& eigen, int n_pairs = 0,
                      bool exclude_stray = true, double overlap_min = 0.5);

struct SandwichReport {
  int n_grid = 0;
  int violations = 0;
  double eta = 0.0;
};

// Two-sided counting comparison on a grid of levels s in [s_lo, s_hi]:
//   Sigma([s + eta, inf)) <= Phi([s, inf)) <= Sigma([s - eta, inf)).
// Phi must already have its stray point excluded. Returns the number of grid
// levels where either inequality fails.
SandwichReport sigma_phi_check(const EdgeProcess& phi, const EdgeProcess& sigma,
                               double eta, double s_lo, double s_hi,
                               int n_grid);

// Smallest gap between consecutive points at or above s_lo; +inf when fewer
// than two points are in range.
double min_spacing_above(const EdgeProcess& p, double s_lo);

// Width of the spectral matching window in units of chi:
// chi = (u - 2) d^{2 gamma - 1} / (u^{3/2} log u).
double spectral_window_chi(const ScaleParams& params, double gamma);

// Two-sided counting error level: d^{3 gamma + epsilon/2 - 1/2} u^5/(u-2)^5.
double eta_error(const ScaleParams& params, double gamma, double epsilon);

// ---------------------------------------------------------------------------
// Per-experiment drivers. Each runs an independent pipeline per seed
// (sample -> profiles -> eigensolve -> processes) and folds the results in
// seed order, so the output is deterministic under any execution schedule.

struct RigidityRow {
  std::uint64_t seed = 0;
  double lambda1 = 0.0;           // largest eigenvalue, stray included
  double lambda1_nonstray = 0.0;  // largest after stray exclusion
  bool stray_separated = false;
  int w_count = 0;                // heavy vertices found
  double pred_max = 0.0;          // largest predictor over the heavy class
  std::uint32_t pred_vertex = 0;
  double match_err = 0.0;         // |lambda1_nonstray - pred_max|
  double mu_ball = 0.0;           // edge eigenvalue of the ball at pred_vertex
  int ball_radius = 0;            // pruning radius actually used
  double mu_err_pred = 0.0;       // |mu_ball - predictor at pred_vertex|
  double mu_err_global = 0.0;     // |mu_ball - lambda1_nonstray|
  bool exact_match = false;       // greedy matching bijection flag
  double max_gap = 0.0;           // largest matched gap (rescaled)
  double max_sym = 0.0;           // symmetry over the top pairs
  std::vector<double> out_mass;   // localization tail mass, radii 0..4
  double loc_margin = 0.0;        // max over radii of mass - envelope
  double radial_residual = 0.0;
  int sandwich_violations = 0;    // at the two-sided eta level
  int sandwich_violations_test = 0;  // at the diagnostic eta level
  double min_sigma_spacing = 0.0;    // above -kappa, rescaled
};

struct RigidityAggregate {
  int n_seeds = 0;
  double frac_match = 0.0;       // match_err <= match_tol
  double frac_ball_pred = 0.0;   // mu_err_pred <= restricted_tol
  double frac_ball_global = 0.0; // mu_err_global <= restricted_tol
  double frac_exact = 0.0;       // exact_match set
  double frac_sym = 0.0;         // max_sym <= 0.01
  double frac_loc = 0.0;         // loc_margin <= 0
  double frac_radial = 0.0;      // radial_residual <= 0.2
  double frac_sandwich = 0.0;    // no violations at the eta level
  double frac_close_pair = 0.0;  // min sigma spacing below eta_test
};

std::vector<RigidityRow> run_rigidity(long long N, double d,
                                      std::uint64_t seed0, int n_seeds,
                                      const Calib& calib,
                                      RigidityAggregate* agg = nullptr);

struct StrayRow {
  std::uint64_t seed = 0;
  double nu_hat = 0.0;
  double overlap = 0.0;
  double abs_err = 0.0;  // |nu_hat - closed-form location|
  bool separated = false;
};

struct StrayAggregate {
  int n_seeds = 0;
  double predictor = 0.0;
  double median_err = 0.0;
  double median_overlap = 0.0;
  int n_separated = 0;
};

// Locates the flat eigenvalue per seed and compares it to the closed-form
// location sqrt(d) + d^{-1/2} + d^{-3/2}. Runs in the regime where the scale
// parameters need not exist, so it never solves for them.
std::vector<StrayRow> run_stray(long long N, double d, std::uint64_t seed0,
                                int n_seeds, const Calib& calib,
                                StrayAggregate* agg = nullptr);

struct PoissonRunResult {
  PoissonStats stats;
  std::vector<EdgeProcess> processes;
  std::vector<IntervalSpec> intervals;
  double kappa = 0.0;
  double floor_rescaled = 0.0;  // certification floor passed to the solver
  int n_coverage_warnings = 0;
};

// Counting-statistics experiment: per seed, certify every eigenvalue down to
// a floor below the window edge -kappa (plus the margin baked in here), build
// the rescaled process with the stray excluded, then aggregate the counting
// tests. Intervals are chosen by splitting the tail at masses 3.5/1.5/0.5.
PoissonRunResult run_poisson(long long N, double d, std::uint64_t seed0,
                             int n_seeds, int k_window, const Calib& calib);

struct TreeBasisRow {
  std::uint64_t seed = 0;
  std::uint64_t ball_size = 0;
  double identity_dev = 0.0;   // three-term recurrence, entrywise
  double dual_route_dev = 0.0; // stored residual vs recomputed one
  double low_g = 0.0;          // residual below the first tracked level
  double f_g_inner = 0.0;      // normalized <g_i, f_{i-3}>
  double orthogonality = 0.0;  // max normalized pairwise f inner product
  bool supp_ok = false;
  double m01_rel = 0.0;        // |M_01 - sqrt(alpha)| / sqrt(alpha)
  double m12_rel = 0.0;        // |M_12 - sqrt(beta)| / sqrt(beta)
  double mz_dev = 0.0;         // max |M_{i,i+1} - Z_i|
  double g_env_max = 0.0;      // worst residual norm vs its envelope
};

struct TreeBasisAggregate {
  int n_samples = 0;
  double max_identity_dev = 0.0;
  double max_dual_route_dev = 0.0;
  double max_low_g = 0.0;
  double max_f_g_inner = 0.0;
  double max_orthogonality = 0.0;
  double max_m01_rel = 0.0;
  double max_m12_rel = 0.0;
  bool all_supp_ok = true;
  double frac_mz = 0.0;  // mz_dev within env_m_z r^2 d^{-3/2+3 gamma}
  double max_g_env = 0.0;
};

// Exact-identity experiment on directly sampled tree balls: the root degree
// is conditioned to the heavy-vertex cutoff, the basis is built to radius r,
// and every structural identity is measured. Tree balls make the recurrence
// exact, so the deviations are pure floating-point noise.
std::vector<TreeBasisRow> run_tree_basis(long long N, double d, int r,
                                         int n_samples, std::uint64_t seed0,
                                         const Calib& calib,
                                         TreeBasisAggregate* agg = nullptr);

}  // namespace spedge

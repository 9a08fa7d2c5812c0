#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "spedge/graph.hpp"

// Eigenpair extraction for the rescaled adjacency operator H = A/sqrt(d):
// global extreme eigenpairs (Lanczos with full reorthogonalization, dense
// fallback on small graphs), exact eigenpairs of balls, the approximate
// tridiagonalization of H around a high-degree vertex, the flat ("stray")
// eigenvalue estimate, and eigenvector localization profiles.

namespace spedge {

enum class WhichEnd { kTop, kBottom, kBoth };

// Extreme eigenpairs of H. Top block sorted descending (largest first),
// bottom block ascending (smallest first). Vectors are unit length and
// pairwise orthogonal; they are left empty in values-only runs, where the
// residual is the certified Lanczos bound rather than a recomputed norm.
struct EdgeEigen {
  int k = 0;
  std::vector<double> values;
  std::vector<double> residuals;
  std::vector<double> flat_overlap;  // |<v, e>| with e = 1/sqrt(N)
  std::vector<std::vector<double>> vectors;
  std::vector<double> bottom_values;
  std::vector<double> bottom_residuals;
  std::vector<double> bottom_flat_overlap;
  std::vector<std::vector<double>> bottom_vectors;
  int iterations = 0;      // Krylov dimension consumed; 0 on the dense path
  bool dense_path = false;
  // When the solver ran with a value floor: how many eigenvalue estimates sat
  // at or above the floor at termination (may exceed the number emitted when
  // it hits the k cap). -1 when no floor was in play.
  int floor_count = -1;
};

struct LanczosOptions {
  WhichEnd which = WhichEnd::kTop;
  bool want_vectors = true;  // form Ritz vectors (heavier in memory traffic)
  int max_m = 480;           // hard cap on the Krylov dimension
  double tol = 1e-8;         // certified residual per accepted pair
  int budget_mult = 10;      // iteration budget = budget_mult * k * ceil(sqrt n)
  // Optional early stop for top-end runs: once at least min_top pairs are
  // certified and every remaining estimate is certified to lie below
  // value_floor, stop and emit only the pairs at or above the floor (still
  // capped at k). The count of estimates above the floor must also be stable
  // across two consecutive checks, so late-emerging eigenvalues near the
  // floor are not cut off. NaN disables the floor. Requires which == kTop.
  double value_floor = std::numeric_limits<double>::quiet_NaN();
  int min_top = 2;
};

// The k algebraically largest (and/or smallest) eigenpairs of H, residual
// <= tol each, deterministic given (graph, seed). Throws std::domain_error
// on bad arguments and std::runtime_error when the iteration budget is
// exhausted before certification.
EdgeEigen top_k_eigenpairs(const GraphSample& g, int k,
                           const LanczosOptions& opt);
EdgeEigen top_k_eigenpairs(const GraphSample& g, int k,
                           WhichEnd which = WhichEnd::kTop);

// Extreme eigenpair of H restricted to the ball B_{r+1}(x). sign = +1 for
// the largest eigenvalue, -1 for the smallest. On tree balls the two agree
// up to sign (bipartite symmetry).
struct RestrictedPair {
  double mu = 0.0;
  std::vector<std::uint32_t> support;  // global vertex ids of the ball
  std::vector<double> w;               // matching unit-vector entries
  double residual = 0.0;
  std::uint64_t ball_size = 0;
  bool dense_path = false;
};
RestrictedPair restricted_eigenpair(const GraphSample& g, std::uint32_t x,
                                    int r, int sign);

// A vector supported on few vertices; `idx` are positions into a basis's
// local ball coordinates, parallel to `val`.
struct SparseVec {
  std::vector<std::uint32_t> idx;
  std::vector<double> val;
};

// Orthogonal radial-type basis f_0..f_r around a center x whose ball
// B_{r+1}(x) is a tree, together with the level constants F_i, the
// tridiagonal section M with M_{i,i+1} = ||f_{i+1}||/(sqrt(d)||f_i||), and
// the defect vectors g_i of the three-term identity
//   A f_i = f_{i+1} + F_{i-1} f_{i-1} + g_i.
// F and f each carry one extension entry past the core list (F_{r-1} and
// f_{r+1}) so the identity can be checked at i = r inclusive. The ball's
// internal adjacency is stored in local coordinates so every identity can be
// re-verified from the basis object alone.
struct TridiagBasis {
  std::uint32_t center = 0;
  int r = 0;
  double d = 0.0;
  double alpha_x = 0.0;
  double beta_x = 0.0;
  std::vector<double> F;           // F_0..F_{r-1}, F_0 = D_x
  std::vector<SparseVec> f;        // f_0..f_{r+1}, local coordinates
  std::vector<double> f_norm;      // ||f_i||, i = 0..r+1
  std::vector<SparseVec> g;        // g_4..g_r (empty when r < 4)
  std::vector<double> m_offdiag;   // M_{i,i+1}, i = 0..r-1 (zero diagonal)
  // ball geometry, local coordinates
  std::vector<std::uint32_t> ball;        // local index -> global vertex id
  std::vector<int> level;                 // distance from center, 0..r+1
  std::vector<std::uint64_t> offsets;     // CSR over local ids
  std::vector<std::uint32_t> adj;
  std::vector<std::uint32_t> nchild;      // N_y, exact for level <= r
  std::vector<std::uint64_t> sphere_sizes;  // |S_i|, i = 0..r+1
  std::vector<double> path_sum;  // ps(y) = sum_{z in (x,y]} (N_z - F_{|z|})
};

// Builds the basis. Throws std::domain_error when B_{r+1}(x) is not a tree
// or some sphere S_i, i <= r - 1, is empty (the outer spheres may be empty;
// the corresponding basis vectors then carry only their path-sum part).
TridiagBasis build_tridiag_basis(const GraphSample& g, std::uint32_t x, int r);

// Recomputes every defining identity of the basis from its stored ball:
//   - A f_i = f_{i+1} + F_{i-1} f_{i-1} + g_i entrywise for 1 <= i <= r,
//     with g_i both from the stored list and rebuilt from the level formula
//     (the dual-route deviation separates formula errors from basis errors);
//   - g_i = 0 for i <= 3; supp g_i inside S_{i-3}; <g_i, f_{i-3}> = 0;
//   - pairwise orthogonality of the f_i;
//   - ||g_i||^2 against env * |S_{i-3}| * d^{2+4 gamma} * i^2.
// Violations are reported, never thrown.
struct BasisIdentityReport {
  int r = 0;
  double max_identity_dev = 0.0;   // entrywise, over 1 <= i <= r
  double max_dual_route_dev = 0.0;
  double max_low_g = 0.0;          // largest |g_i| entry over i <= 3
  bool supp_ok = true;
  double max_f_g_inner = 0.0;      // normalized |<g_i, f_{i-3}>|
  double max_orthogonality = 0.0;  // normalized max |<f_i, f_j>|, i != j
  std::vector<double> g_norm_sq;        // i = 4..r
  std::vector<double> g_envelope_ratio; // against env |S_{i-3}| d^{2+4g} i^2
};
BasisIdentityReport verify_basis_identities(const TridiagBasis& b, double gamma = 0.125,
                           double env = 4.0);

// Max entrywise deviation between the measured section M and the idealized
// section with off-diagonal (sqrt(alpha_x), sqrt(beta_x), sqrt(1+1/d), ...).
// The first two entries agree identically; the rest deviate at the level of
// the local geometry fluctuations.
double compare_M_Z(const TridiagBasis& b, double d);

// The flat eigenvalue: among the top eigenpairs, the one with the largest
// overlap with e = 1/sqrt(N). Predictor sqrt(d) + d^{-1/2} + d^{-3/2}.
// Requires d >= 4. When no overlap reaches overlap_min the estimate is
// reported with separated = false and an explanatory message (for small d
// the flat eigenvalue sits inside the bulk).
struct StrayReport {
  double nu_hat = 0.0;
  double overlap = 0.0;
  double predictor = 0.0;
  double flat_distance = 0.0;  // ||v - e|| after sign alignment
  bool separated = false;
  std::string message;
};
StrayReport stray_estimate(const GraphSample& g, const EdgeEigen& eigen,
                           double overlap_min = 0.5);
StrayReport stray_estimate(const GraphSample& g, int k = 8,
                           double overlap_min = 0.5);

// Mass of a unit eigenvector outside balls around x, plus the residual of
// the radial ansatz with coefficients
//   u_1 = (sigma / sqrt(alpha_x)) u_0,  u_k = (2/(sigma+sqrt(sigma^2-4)))^{k-1} u_1
// spread uniformly over each sphere. Requires sigma > 2 and ||w|| = 1.
struct LocalizationProfile {
  std::vector<double> out_mass;  // ||w restricted to B_i(x)^c||, i = 0..r_max
  double radial_residual = 0.0;  // min over sign of ||w - ansatz||
  double q = 0.0;                // sphere-to-sphere decay ratio of the ansatz
};
LocalizationProfile localization_profile(const GraphSample& g,
                                         const std::vector<double>& w,
                                         std::uint32_t x, int r_max,
                                         double sigma);

// First-order eigenvalue location for a self-adjoint matrix M (dense,
// row-major, n x n): given an approximate pair (lambda, v) with residual
// eps = ||(M - lambda) v|| and a window delta >= 5 eps containing exactly
// one eigenvalue mu, checks |mu - lambda - <v, (M - lambda) v>| <=
// pert_c * eps^2 / delta against a full diagonalization.
struct PerturbationReport {
  bool preconditions_ok = false;  // unit v, isolated window, delta >= 5 eps
  double mu = 0.0;
  double eps = 0.0;
  double correction = 0.0;  // <v, (M - lambda) v>
  double lhs = 0.0;         // |mu - lambda - correction|
  double bound = 0.0;       // pert_c * eps^2 / delta
  bool ok = false;
};
PerturbationReport perturbation_check(const std::vector<double>& m_dense,
                                      int n, double lambda,
                                      const std::vector<double>& v,
                                      double delta, double pert_c = 4.0);

}  // namespace spedge

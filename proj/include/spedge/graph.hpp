#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "spedge/scalar_theory.hpp"

// Seeded sparse graph sampling and BFS geometry: spheres, balls, children
// counts, per-vertex profiles (alpha, beta), the three vertex classes, and
// structural audits that report measured margins against the theoretical
// concentration bounds.

namespace spedge {

struct GraphSample {
  long long N = 0;
  double d = 0.0;
  std::uint64_t seed = 0;
  // Compressed sparse symmetric adjacency.
  std::vector<std::uint64_t> offsets;  // N + 1
  std::vector<std::uint32_t> adj;      // 2 * edge_count, sorted per row
  std::vector<std::uint32_t> degrees;  // N
  std::uint64_t edge_count = 0;
};

// Each unordered pair kept independently with probability d/N, enumerated by
// geometric gap skipping over the lexicographic pair index: expected O(N d)
// time. Identical (N, d, seed) gives a bit-identical edge set.
GraphSample sample_er(long long N, double d, std::uint64_t seed);

// Edge-list dump: header "# er N d seed", then one "u v" line per edge with
// 0-based ids and u < v.
void dump_edges(const GraphSample& g, std::ostream& out);

struct VertexProfile {
  std::uint32_t x = 0;
  int r = 0;
  double alpha = 0.0;        // degrees[x] / d
  double beta = 0.0;         // |S_2| / (d |S_1|), 0 when undefined
  bool beta_defined = false; // false iff |S_1| = 0
  bool degenerate = false;   // |S_1| = 0 or |S_2| = 0
  bool is_tree = false;      // the induced ball B_r(x) is acyclic
  std::vector<std::uint64_t> sphere_sizes;  // |S_i| for i = 0..r
  // BFS order: ball[0] = x; dist/parent/children are parallel arrays.
  std::vector<std::uint32_t> ball;
  std::vector<int> dist;
  std::vector<std::uint32_t> parent;    // index into `ball`; root points to 0
  std::vector<std::uint32_t> children;  // N_y = neighbors one level out
};

// BFS profile of radius r around x. Children counts N_y are exact for all
// ball vertices with dist < r (a vertex on the boundary sphere would need
// radius r+1 knowledge, so its entry is 0).
VertexProfile vertex_profile(const GraphSample& g, std::uint32_t x, int r);

struct VertexClasses {
  std::vector<std::uint32_t> W, V, U;  // sorted vertex ids
  double w_cut = 0.0, v_cut = 0.0, u_cut = 0.0;  // alpha thresholds used
  double gamma = 0.0, c_star = 0.0;
  bool dense_branch = false;  // d > (log N)^{3/4} selects the V/U variants
  // The theoretical coupling between gamma and a - 2 that guarantees the
  // cutoff ordering; at desk scale it can fail, so it is reported, and
  // ordering_ok records whether W subset V subset U actually held.
  bool condition_alpha_max_min = false;
  bool ordering_ok = false;
};

// Literal threshold classification. Vertices with undefined beta cannot
// enter any class (their alpha = 0 is below every cutoff).
VertexClasses classify_vertices(const GraphSample& g, const ScaleParams& p,
                                double gamma, double c_star);

// Pruning radius 42 + floor((1/c) (a/(a-2))^2 (log d / log a)).
int choice_radius(double a_frak, double d, double c);

// Largest radius <= r_max whose ball around x stays at or below N/2 vertices.
int clamp_radius_by_ball(const GraphSample& g, std::uint32_t x, int r_max);

struct AuditReport {
  bool is_tree = false;
  bool disjoint_from_others = true;  // no other flagged vertex within 2r
  // Dimensionless ratios (measured / theoretical bound); <= 1 means the
  // sample sits inside the concentration envelope at unit constant.
  std::vector<double> growth_ratio;   // i = 1..r: |S_{i+1}|/(d|S_i|) vs 1
  std::vector<double> size_ratio;     // i = 1..r: |S_i|/(D_x d^{i-1}) vs 1
  double degree_ratio = 0.0;          // max over ball of |D_y - d|/(sqrt(delta) d)
  std::vector<double> child_sum_ratio;   // i = 1..r: |sum (N_y - d)| vs level bound
  std::vector<double> quad_sum;          // i = 1..r: raw sum of (N_y - d)^2
  std::vector<double> quad_sum_ratio;    // vs |S_i| d (log d + sqrt(delta))(1 + d delta/|S_i|)
};

// Measures every structural property the theory needs near a heavy vertex.
// Never throws on degenerate geometry; empty levels simply stop the lists.
AuditReport audit_ball(const GraphSample& g, std::uint32_t x, int r,
                       double delta,
                       const std::vector<std::uint32_t>& others = {});

// Direct sampler of the BFS exploration tree around a conditioned root: the
// root degree is Binomial(N-1, d/N) conditioned to be at least
// min_root_degree, every later vertex draws Binomial(N - consumed, d/N)
// children, and collisions are suppressed, so the result is exactly a tree
// ball of depth `depth`. Returned as a GraphSample over the tree's vertices
// with the root at id 0 (the d field keeps the original d so alpha/beta
// normalizations carry over).
GraphSample sample_tree_ball(long long N, double d, int depth,
                             long long min_root_degree, std::uint64_t seed);

}  // namespace spedge

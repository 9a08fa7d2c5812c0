#include "spedge/graph.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <queue>
#include <stdexcept>

#include "spedge/prob_approx.hpp"
#include "spedge/rng.hpp"

namespace spedge {

namespace {

// Number of pair indices to skip before the next kept pair, for keep
// probability p: geometric with support {0, 1, 2, ...}.
inline std::uint64_t geometric_gap(SplitMix64& rng, double log1m_p) {
  const double u = rng.uniform_pos();
  const double gap = std::floor(std::log(u) / log1m_p);
  if (gap >= 9e18) return static_cast<std::uint64_t>(9e18);
  return static_cast<std::uint64_t>(gap);
}

}  // namespace

GraphSample sample_er(long long N, double d, std::uint64_t seed) {
  if (N < 3) throw std::domain_error("sample_er: need N >= 3");
  if (!(d >= 0.0) || !(d <= static_cast<double>(N)))
    throw std::domain_error("sample_er: need 0 <= d <= N");

  GraphSample g;
  g.N = N;
  g.d = d;
  g.seed = seed;
  g.degrees.assign(static_cast<std::size_t>(N), 0);

  const double p = d / static_cast<double>(N);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;

  const std::uint64_t total_pairs =
      static_cast<std::uint64_t>(N) * static_cast<std::uint64_t>(N - 1) / 2;

  if (p >= 1.0) {
    edges.reserve(total_pairs);
    for (std::uint32_t i = 0; i + 1 < static_cast<std::uint64_t>(N); ++i)
      for (std::uint32_t j = i + 1; j < static_cast<std::uint64_t>(N); ++j)
        edges.emplace_back(i, j);
  } else if (p > 0.0) {
    SplitMix64 rng = SplitMix64::stream(seed, 0);
    const double log1m_p = std::log1p(-p);
    edges.reserve(static_cast<std::size_t>(p * static_cast<double>(total_pairs) * 1.1) + 16);
    // Walk the lexicographic enumeration of pairs (i, j), i < j; `row_base`
    // is the index of pair (i, i+1) and `row_len` the row's pair count.
    std::uint64_t idx = geometric_gap(rng, log1m_p);
    std::uint64_t row_base = 0;
    std::uint64_t row_len = static_cast<std::uint64_t>(N - 1);
    std::uint32_t i = 0;
    while (idx < total_pairs) {
      while (idx >= row_base + row_len) {
        row_base += row_len;
        --row_len;
        ++i;
      }
      const std::uint32_t j =
          i + 1 + static_cast<std::uint32_t>(idx - row_base);
      edges.emplace_back(i, j);
      idx += 1 + geometric_gap(rng, log1m_p);
    }
  }

  g.edge_count = edges.size();
  for (const auto& e : edges) {
    ++g.degrees[e.first];
    ++g.degrees[e.second];
  }
  g.offsets.assign(static_cast<std::size_t>(N) + 1, 0);
  for (long long v = 0; v < N; ++v)
    g.offsets[static_cast<std::size_t>(v) + 1] =
        g.offsets[static_cast<std::size_t>(v)] + g.degrees[static_cast<std::size_t>(v)];
  g.adj.resize(2 * g.edge_count);
  std::vector<std::uint64_t> cursor(g.offsets.begin(), g.offsets.end() - 1);
  for (const auto& e : edges) {
    g.adj[cursor[e.first]++] = e.second;
    g.adj[cursor[e.second]++] = e.first;
  }
  // Rows come out sorted for the second endpoint only; sort each row so that
  // lookups and dumps are canonical.
  for (long long v = 0; v < N; ++v)
    std::sort(g.adj.begin() + static_cast<std::ptrdiff_t>(g.offsets[static_cast<std::size_t>(v)]),
              g.adj.begin() + static_cast<std::ptrdiff_t>(g.offsets[static_cast<std::size_t>(v) + 1]));
  return g;
}

void dump_edges(const GraphSample& g, std::ostream& out) {
  out << "# er " << g.N << " " << g.d << " " << g.seed << "\n";
  for (long long u = 0; u < g.N; ++u) {
    for (std::uint64_t k = g.offsets[static_cast<std::size_t>(u)];
         k < g.offsets[static_cast<std::size_t>(u) + 1]; ++k) {
      const std::uint32_t v = g.adj[k];
      if (static_cast<long long>(v) > u) out << u << " " << v << "\n";
    }
  }
}

VertexProfile vertex_profile(const GraphSample& g, std::uint32_t x, int r) {
  if (static_cast<long long>(x) >= g.N)
    throw std::domain_error("vertex_profile: vertex out of range");
  if (r < 1) throw std::domain_error("vertex_profile: need r >= 1");

  VertexProfile pr;
  pr.x = x;
  pr.r = r;

  // BFS with a global visited map (allocated per call; the graph itself is
  // immutable and shareable).
  std::vector<std::int32_t> level(static_cast<std::size_t>(g.N), -1);
  pr.ball.push_back(x);
  pr.dist.push_back(0);
  pr.parent.push_back(0);
  level[x] = 0;
  std::size_t head = 0;
  while (head < pr.ball.size()) {
    const std::uint32_t y = pr.ball[head];
    const int dy = pr.dist[head];
    if (dy == r) break;  // BFS order: all later entries are at depth >= r
    for (std::uint64_t k = g.offsets[y]; k < g.offsets[y + 1]; ++k) {
      const std::uint32_t z = g.adj[k];
      if (level[z] < 0) {
        level[z] = dy + 1;
        pr.ball.push_back(z);
        pr.dist.push_back(dy + 1);
        pr.parent.push_back(static_cast<std::uint32_t>(head));
      }
    }
    ++head;
  }

  pr.sphere_sizes.assign(static_cast<std::size_t>(r) + 1, 0);
  for (int dv : pr.dist) ++pr.sphere_sizes[static_cast<std::size_t>(dv)];

  // Children counts: neighbors one level further out; exact for dist < r.
  pr.children.assign(pr.ball.size(), 0);
  std::uint64_t internal_edge_ends = 0;  // adjacency entries inside the ball
  for (std::size_t idx = 0; idx < pr.ball.size(); ++idx) {
    const std::uint32_t y = pr.ball[idx];
    const int dy = pr.dist[idx];
    std::uint32_t down = 0;
    for (std::uint64_t k = g.offsets[y]; k < g.offsets[y + 1]; ++k) {
      const std::uint32_t z = g.adj[k];
      if (level[z] >= 0 && level[z] <= r) ++internal_edge_ends;
      if (level[z] == dy + 1 && dy + 1 <= r) ++down;
    }
    if (dy < r) pr.children[idx] = down;
  }
  const std::uint64_t edges_within = internal_edge_ends / 2;
  pr.is_tree = (edges_within == pr.ball.size() - 1);

  pr.alpha = static_cast<double>(g.degrees[x]) / g.d;
  const std::uint64_t s1 = pr.sphere_sizes.size() > 1 ? pr.sphere_sizes[1] : 0;
  const std::uint64_t s2 = pr.sphere_sizes.size() > 2 ? pr.sphere_sizes[2] : 0;
  pr.beta_defined = s1 > 0;
  pr.degenerate = (s1 == 0) || (s2 == 0);
  pr.beta = pr.beta_defined
                ? static_cast<double>(s2) / (g.d * static_cast<double>(s1))
                : 0.0;
  return pr;
}

VertexClasses classify_vertices(const GraphSample& g, const ScaleParams& p,
                                double gamma, double c_star) {
  VertexClasses cls;
  cls.gamma = gamma;
  cls.c_star = c_star;
  const double a = p.a_frak;
  const double d = p.d;
  const double logN = std::log(static_cast<double>(p.N));
  cls.dense_branch = d > std::pow(logN, 0.75);

  cls.w_cut = a - c_star * std::pow(d, 2.0 * gamma - 1.0) / std::log(a);
  if (cls.dense_branch) {
    cls.v_cut = a - c_star * (std::pow(a, 1.5) / (a - 2.0)) *
                        (std::pow(logN, 0.25) / std::sqrt(d)) * std::log(d);
    cls.u_cut = 2.0 + std::pow(std::sqrt(logN) * std::log(d) / d, 0.25);
  } else {
    cls.v_cut = a - c_star * std::sqrt(a);
    cls.u_cut = a / 5.0;
  }

  // The coupling (a - 2) >= log(d) max(d^{-1/20 + 3 gamma/2}, d^{-2 gamma/3})
  // guarantees the cutoff ordering asymptotically.
  const double cond_rhs =
      std::log(d) * std::max(std::pow(d, -0.05 + 1.5 * gamma),
                             std::pow(d, -2.0 * gamma / 3.0));
  cls.condition_alpha_max_min = (a - 2.0) >= cond_rhs;

  for (long long v = 0; v < g.N; ++v) {
    // Isolated vertices have no second sphere, hence no beta; they are
    // never class members even when a desk-scale cutoff dips below zero.
    if (g.degrees[static_cast<std::size_t>(v)] == 0) continue;
    const double alpha =
        static_cast<double>(g.degrees[static_cast<std::size_t>(v)]) / d;
    if (alpha >= cls.w_cut) cls.W.push_back(static_cast<std::uint32_t>(v));
    if (alpha >= cls.v_cut) cls.V.push_back(static_cast<std::uint32_t>(v));
    if (alpha >= cls.u_cut) cls.U.push_back(static_cast<std::uint32_t>(v));
  }
  cls.ordering_ok = cls.w_cut >= cls.v_cut && cls.v_cut >= cls.u_cut;
  return cls;
}

int choice_radius(double a_frak, double d, double c) {
  if (!(a_frak > 2.0) || !(d > 1.0) || !(c > 0.0))
    throw std::domain_error("choice_radius: need a > 2, d > 1, c > 0");
  const double ratio = a_frak / (a_frak - 2.0);
  return 42 + static_cast<int>(std::floor(
                  (1.0 / c) * ratio * ratio * std::log(d) / std::log(a_frak)));
}

int clamp_radius_by_ball(const GraphSample& g, std::uint32_t x, int r_max) {
  // Grow the BFS one level at a time until the next level would push the
  // ball beyond N/2 vertices.
  std::vector<std::int32_t> level(static_cast<std::size_t>(g.N), -1);
  std::vector<std::uint32_t> frontier{x};
  level[x] = 0;
  std::uint64_t ball_size = 1;
  const std::uint64_t cap = static_cast<std::uint64_t>(g.N) / 2;
  int r = 0;
  while (r < r_max && !frontier.empty()) {
    std::vector<std::uint32_t> next;
    for (std::uint32_t y : frontier) {
      for (std::uint64_t k = g.offsets[y]; k < g.offsets[y + 1]; ++k) {
        const std::uint32_t z = g.adj[k];
        if (level[z] < 0) {
          level[z] = r + 1;
          next.push_back(z);
        }
      }
    }
    if (ball_size + next.size() > cap) break;
    ball_size += next.size();
    frontier = std::move(next);
    ++r;
  }
  return r;
}

AuditReport audit_ball(const GraphSample& g, std::uint32_t x, int r,
                       double delta,
                       const std::vector<std::uint32_t>& others) {
  if (!(delta > 0.0)) throw std::domain_error("audit_ball: need delta > 0");
  // Children counts need one extra level of distance information.
  VertexProfile pr = vertex_profile(g, x, r + 1);
  AuditReport rep;

  {
    // Tree flag for B_r itself (the profile covers r + 1).
    VertexProfile inner = vertex_profile(g, x, r);
    rep.is_tree = inner.is_tree;
  }

  // Ball disjointness: no other flagged vertex within distance 2r. We test
  // membership of the others in B_{2r}(x).
  if (!others.empty()) {
    VertexProfile wide = vertex_profile(g, x, 2 * r);
    std::vector<char> in_ball(static_cast<std::size_t>(g.N), 0);
    for (std::uint32_t y : wide.ball) in_ball[y] = 1;
    for (std::uint32_t y : others)
      if (y != x && in_ball[y]) rep.disjoint_from_others = false;
  }

  const double d = g.d;
  const double Dx = static_cast<double>(g.degrees[x]);
  // gamma solving delta = d^{2 gamma - 1}, used by the child-sum bound.
  const double gamma = 0.5 * (1.0 + std::log(delta) / std::log(d));

  // Sphere growth and size ratios (levels 1..r; the level-0 growth is just
  // the root degree and is reported through alpha instead).
  for (int i = 1; i <= r; ++i) {
    const double si = static_cast<double>(pr.sphere_sizes[static_cast<std::size_t>(i)]);
    const double si1 = static_cast<double>(pr.sphere_sizes[static_cast<std::size_t>(i) + 1]);
    if (si == 0.0) break;
    const double measured = std::abs(si1 / (d * si) - 1.0);
    rep.growth_ratio.push_back(measured * std::sqrt(si / delta));
  }
  for (int i = 1; i <= r; ++i) {
    const double si = static_cast<double>(pr.sphere_sizes[static_cast<std::size_t>(i)]);
    if (Dx == 0.0) break;
    const double expect = Dx * std::pow(d, i - 1);
    const double measured = std::abs(si / expect - 1.0);
    rep.size_ratio.push_back(measured * std::sqrt(Dx / delta));
  }

  // Degree concentration over the punctured ball B_r \ {x}.
  double worst_deg = 0.0;
  for (std::size_t idx = 1; idx < pr.ball.size(); ++idx) {
    if (pr.dist[idx] > r) continue;
    const double dev = std::abs(
        static_cast<double>(g.degrees[pr.ball[idx]]) - d);
    worst_deg = std::max(worst_deg, dev);
  }
  rep.degree_ratio = worst_deg / (std::sqrt(delta) * d);

  // Per-level children sums and quadratic sums (children are exact for
  // dist <= r because the profile was taken at radius r + 1).
  for (int i = 1; i <= r; ++i) {
    double lin = 0.0, quad = 0.0;
    bool level_nonempty = false;
    for (std::size_t idx = 0; idx < pr.ball.size(); ++idx) {
      if (pr.dist[idx] != i) continue;
      level_nonempty = true;
      const double dev = static_cast<double>(pr.children[idx]) - d;
      lin += dev;
      quad += dev * dev;
    }
    if (!level_nonempty) break;
    const double si = static_cast<double>(pr.sphere_sizes[static_cast<std::size_t>(i)]);
    const double lin_bound = std::pow(d, 0.5 * (i + 1) + gamma);
    rep.child_sum_ratio.push_back(std::abs(lin) / lin_bound);
    rep.quad_sum.push_back(quad);
    const double quad_bound = si * d * (std::log(d) + std::sqrt(delta)) *
                              (1.0 + d * delta / si);
    rep.quad_sum_ratio.push_back(quad / quad_bound);
  }
  return rep;
}

GraphSample sample_tree_ball(long long N, double d, int depth,
                             long long min_root_degree, std::uint64_t seed) {
  if (N < 3) throw std::domain_error("sample_tree_ball: need N >= 3");
  if (!(d > 0.0) || !(d < static_cast<double>(N)))
    throw std::domain_error("sample_tree_ball: need 0 < d < N");
  if (depth < 1) throw std::domain_error("sample_tree_ball: need depth >= 1");
  if (min_root_degree < 0 || min_root_degree >= N)
    throw std::domain_error("sample_tree_ball: bad min_root_degree");

  SplitMix64 rng = SplitMix64::stream(seed, 1);
  const double p = d / static_cast<double>(N);
  const double log1m_p = std::log1p(-p);

  // Count successes in `trials` Bernoulli(p) draws by geometric skipping.
  const auto binomial_count = [&](long long trials) -> long long {
    if (trials <= 0) return 0;
    long long successes = 0;
    std::uint64_t pos = geometric_gap(rng, log1m_p);
    while (pos < static_cast<std::uint64_t>(trials)) {
      ++successes;
      pos += 1 + geometric_gap(rng, log1m_p);
    }
    return successes;
  };

  // Root degree: Binomial(N-1, p) conditioned on >= min_root_degree, drawn
  // by inversion over the conditioned tail in linear space (the tail mass
  // is exact via the complement pmf recurrence).
  long long root_degree = min_root_degree;
  {
    const long long n_trials = N - 1;
    double log_pmf = log_binomial_pmf(min_root_degree, n_trials, p);
    double pmf = std::exp(log_pmf);
    double tail = 0.0;
    {
      double t_pmf = pmf;
      for (long long k = min_root_degree;; ++k) {
        tail += t_pmf;
        if (k >= n_trials || t_pmf < 1e-18 * tail) break;
        t_pmf *= (static_cast<double>(n_trials - k) /
                  static_cast<double>(k + 1)) *
                 (p / (1.0 - p));
      }
    }
    double u = rng.uniform() * tail;
    double acc = pmf;
    long long k = min_root_degree;
    while (u > acc && k < n_trials) {
      pmf *= (static_cast<double>(n_trials - k) / static_cast<double>(k + 1)) *
             (p / (1.0 - p));
      ++k;
      acc += pmf;
    }
    root_degree = k;
  }

  // Explore level by level. consumed counts vertices already revealed; each
  // new vertex draws its forward degree from the unexplored remainder.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  long long consumed = 1 + root_degree;
  std::uint32_t next_id = 1;
  std::vector<std::uint32_t> frontier;
  for (long long c = 0; c < root_degree; ++c) {
    edges.emplace_back(0, next_id);
    frontier.push_back(next_id);
    ++next_id;
  }
  for (int level = 2; level <= depth; ++level) {
    std::vector<std::uint32_t> next_frontier;
    for (std::uint32_t y : frontier) {
      const long long kids = binomial_count(N - consumed);
      consumed += kids;
      for (long long c = 0; c < kids; ++c) {
        edges.emplace_back(y, next_id);
        next_frontier.push_back(next_id);
        ++next_id;
      }
    }
    frontier = std::move(next_frontier);
    if (frontier.empty()) break;
  }

  GraphSample g;
  g.N = next_id;
  g.d = d;
  g.seed = seed;
  g.edge_count = edges.size();
  g.degrees.assign(static_cast<std::size_t>(g.N), 0);
  for (const auto& e : edges) {
    ++g.degrees[e.first];
    ++g.degrees[e.second];
  }
  g.offsets.assign(static_cast<std::size_t>(g.N) + 1, 0);
  for (long long v = 0; v < g.N; ++v)
    g.offsets[static_cast<std::size_t>(v) + 1] =
        g.offsets[static_cast<std::size_t>(v)] +
        g.degrees[static_cast<std::size_t>(v)];
  g.adj.resize(2 * g.edge_count);
  std::vector<std::uint64_t> cursor(g.offsets.begin(), g.offsets.end() - 1);
  for (const auto& e : edges) {
    g.adj[cursor[e.first]++] = e.second;
    g.adj[cursor[e.second]++] = e.first;
  }
  for (long long v = 0; v < g.N; ++v)
    std::sort(g.adj.begin() + static_cast<std::ptrdiff_t>(g.offsets[static_cast<std::size_t>(v)]),
              g.adj.begin() + static_cast<std::ptrdiff_t>(g.offsets[static_cast<std::size_t>(v) + 1]));
  return g;
}

}  // namespace spedge

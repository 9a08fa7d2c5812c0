#include "spedge/spectra.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "spedge/rng.hpp"
#include "spedge/tridiagonal.hpp"

namespace spedge {

namespace {

constexpr std::uint64_t kStartStream = 0x517ec7a1ULL;

// y = (A / sqrt(d)) x over the CSR adjacency.
void hmatvec(const GraphSample& g, const double* x, double* y) {
  const double inv = 1.0 / std::sqrt(g.d);
  const std::size_t n = static_cast<std::size_t>(g.N);
  for (std::size_t u = 0; u < n; ++u) {
    double acc = 0.0;
    for (std::uint64_t e = g.offsets[u]; e < g.offsets[u + 1]; ++e)
      acc += x[g.adj[e]];
    y[u] = acc * inv;
  }
}

struct RitzCheck {
  bool converged = false;
  int emit_top = 0;  // top pairs to emit when converged
  int n_above = -1;  // estimates at or above the floor; -1 when no floor
};

// Residual bounds for the wanted Ritz pairs of the m x m projected matrix:
// || H y - theta y || = next_beta * |s_{m-1}| for the Ritz vector with
// T-eigenvector s. True up to roundoff-level terms from reorthogonalization.
// A finite floor shrinks the wanted top pairs to those at or above it (at
// least min_top), and additionally requires the first pair below the floor
// to be certified to stay below it, so nothing above the floor is missed.
RitzCheck check_ritz(const std::vector<double>& ta,
                     const std::vector<double>& tb, int m, double next_beta,
                     int ktop, int kbot, double tol, double floor_val,
                     int min_top) {
  RitzCheck rc;
  rc.emit_top = ktop;
  std::vector<double> off(tb.begin(), tb.begin() + (m - 1));
  const bool use_floor = ktop > 0 && std::isfinite(floor_val);
  if (use_floor) {
    rc.n_above = m - sturm_count_below(ta.data(), off, floor_val);
    rc.emit_top = std::min(ktop, std::max(min_top, rc.n_above));
  }
  if (m < rc.emit_top + kbot) return rc;
  auto pair_bound = [&](int idx, double* theta_out) {
    const double theta = tridiag_eigenvalue(ta.data(), off, idx);
    const std::vector<double> s = tridiag_eigenvector(ta.data(), off, theta);
    if (theta_out != nullptr) *theta_out = theta;
    return next_beta * std::abs(s[static_cast<std::size_t>(m) - 1]);
  };
  for (int i = 0; i < rc.emit_top; ++i)
    if (pair_bound(m - 1 - i, nullptr) > tol) return rc;
  for (int i = 0; i < kbot; ++i)
    if (pair_bound(i, nullptr) > tol) return rc;
  if (use_floor && rc.emit_top < ktop && rc.emit_top < m) {
    double theta = 0.0;
    const double bound = pair_bound(m - 1 - rc.emit_top, &theta);
    if (theta + std::max(bound, tol) > floor_val) return rc;
  }
  rc.converged = true;
  return rc;
}

EdgeEigen dense_solve(const GraphSample& g, int k, const LanczosOptions& opt) {
  const Eigen::Index n = static_cast<Eigen::Index>(g.N);
  if (k > n) throw std::domain_error("top_k_eigenpairs: k exceeds dimension");
  const double inv = 1.0 / std::sqrt(g.d);
  Eigen::MatrixXd hd = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index u = 0; u < n; ++u)
    for (std::uint64_t e = g.offsets[static_cast<std::size_t>(u)];
         e < g.offsets[static_cast<std::size_t>(u) + 1]; ++e)
      hd(u, static_cast<Eigen::Index>(g.adj[e])) += inv;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hd);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("top_k_eigenpairs: dense eigensolver failed");

  const Eigen::VectorXd flat = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(
      static_cast<double>(n)));
  EdgeEigen out;
  out.k = k;
  out.dense_path = true;
  auto emit = [&](Eigen::Index col, std::vector<double>& values,
                  std::vector<double>& residuals, std::vector<double>& overlaps,
                  std::vector<std::vector<double>>& vectors) {
    const double val = es.eigenvalues()(col);
    Eigen::VectorXd y = es.eigenvectors().col(col);
    values.push_back(val);
    residuals.push_back((hd * y - val * y).norm());
    overlaps.push_back(std::abs(flat.dot(y)));
    if (opt.want_vectors)
      vectors.emplace_back(y.data(), y.data() + n);
  };
  int emit_top = k;
  if (opt.which == WhichEnd::kTop && std::isfinite(opt.value_floor)) {
    int cnt = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (es.eigenvalues()(i) >= opt.value_floor) ++cnt;
    out.floor_count = cnt;
    emit_top = std::min({k, std::max(opt.min_top, cnt), static_cast<int>(n)});
  }
  if (opt.which != WhichEnd::kBottom)
    for (int i = 0; i < emit_top; ++i)
      emit(n - 1 - i, out.values, out.residuals, out.flat_overlap, out.vectors);
  if (opt.which != WhichEnd::kTop)
    for (int i = 0; i < k; ++i)
      emit(i, out.bottom_values, out.bottom_residuals, out.bottom_flat_overlap,
           out.bottom_vectors);
  return out;
}

EdgeEigen lanczos_solve(const GraphSample& g, int k, const LanczosOptions& opt) {
  const Eigen::Index n = static_cast<Eigen::Index>(g.N);
  const int ktop = (opt.which != WhichEnd::kBottom) ? k : 0;
  const int kbot = (opt.which != WhichEnd::kTop) ? k : 0;
  const long long budget =
      static_cast<long long>(opt.budget_mult) * k *
      static_cast<long long>(std::ceil(std::sqrt(static_cast<double>(n))));
  const int mcap = static_cast<int>(std::min<long long>(
      {n, opt.max_m, std::max<long long>(budget, 2LL * k + 16)}));

  Eigen::MatrixXd v(n, mcap);
  Eigen::VectorXd w(n), c;
  std::vector<double> ta, tb;
  ta.reserve(static_cast<std::size_t>(mcap));
  tb.reserve(static_cast<std::size_t>(mcap));

  SplitMix64 rng = SplitMix64::stream(g.seed, kStartStream);
  for (Eigen::Index i = 0; i < n; ++i) v(i, 0) = rng.uniform() - 0.5;
  v.col(0).normalize();

  double next_beta = 0.0;
  double tscale = 1.0;
  int m = 0;
  bool converged = false;
  const bool use_floor = ktop > 0 && std::isfinite(opt.value_floor);
  int last_above = -2;  // floor count at the previous check, for stability
  int emit_top = ktop;
  int floor_cnt = -1;
  RitzCheck pending;  // result of the latest check, consulted on breakdown
  for (int j = 0; j < mcap; ++j) {
    m = j + 1;
    hmatvec(g, v.col(j).data(), w.data());
    if (j > 0) w -= tb[static_cast<std::size_t>(j) - 1] * v.col(j - 1);
    const double a = v.col(j).dot(w);
    w -= a * v.col(j);
    ta.push_back(a);
    tscale = std::max(tscale, std::abs(a));
    // Full reorthogonalization; a second pass when the first one removed a
    // large component (the classical twice-is-enough rule).
    {
      const double before = w.norm();
      c.noalias() = v.leftCols(m).transpose() * w;
      w.noalias() -= v.leftCols(m) * c;
      if (w.norm() < 0.7071 * before) {
        c.noalias() = v.leftCols(m).transpose() * w;
        w.noalias() -= v.leftCols(m) * c;
      }
    }
    next_beta = w.norm();
    tscale = std::max(tscale, next_beta);
    const bool tiny = next_beta <= 1e-12 * tscale;

    const bool cadence = (m % 8 == 0 && m >= ktop + kbot + 4);
    if (tiny || cadence || m == mcap) {
      pending = check_ritz(ta, tb, m, next_beta, ktop, kbot, 0.5 * opt.tol,
                           opt.value_floor, opt.min_top);
      const bool stable = !use_floor || pending.n_above == last_above;
      last_above = pending.n_above;
      if (pending.converged && stable) {
        converged = true;
        emit_top = pending.emit_top;
        floor_cnt = pending.n_above;
        break;
      }
    }

    if (j + 1 == mcap) break;

    if (tiny) {
      // Invariant subspace: inject a fresh direction orthogonal to the
      // Krylov space so the search can continue (the projected matrix gains
      // a zero coupling, which keeps every stored relation valid).
      bool injected = false;
      for (int attempt = 0; attempt < 3 && !injected; ++attempt) {
        for (Eigen::Index i = 0; i < n; ++i) w(i) = rng.uniform() - 0.5;
        w.normalize();
        for (int pass = 0; pass < 2; ++pass) {
          c.noalias() = v.leftCols(m).transpose() * w;
          w.noalias() -= v.leftCols(m) * c;
        }
        const double nn = w.norm();
        if (nn > 1e-6) {
          w /= nn;
          injected = true;
        }
      }
      if (!injected) {
        // The whole reachable space is spanned, so the projected matrix
        // already carries every eigenvalue it can; accept the last check
        // without the floor-count stability requirement.
        if (pending.converged) {
          converged = true;
          emit_top = pending.emit_top;
          floor_cnt = pending.n_above;
        }
        break;
      }
      tb.push_back(0.0);
    } else {
      w /= next_beta;
      tb.push_back(next_beta);
    }
    v.col(j + 1) = w;
  }

  if (!converged) {
    std::ostringstream msg;
    msg << "top_k_eigenpairs: Lanczos failed to certify residual " << opt.tol
        << " within budget (n=" << n << ", k=" << k << ", m=" << m
        << ", cap=" << mcap << ", last off-diagonal=" << next_beta << ")";
    throw std::runtime_error(msg.str());
  }

  Eigen::Map<const Eigen::VectorXd> dv(ta.data(), m);
  Eigen::VectorXd ev(std::max(m - 1, 0));
  for (int i = 0; i + 1 < m; ++i) ev(i) = tb[static_cast<std::size_t>(i)];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(dv, ev, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("top_k_eigenpairs: projected eigensolver failed");

  const Eigen::VectorXd flat = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(
      static_cast<double>(n)));
  const Eigen::VectorXd te = v.leftCols(m).transpose() * flat;

  EdgeEigen out;
  out.k = k;
  out.iterations = m;
  out.floor_count = floor_cnt;
  Eigen::VectorXd y(n), hy(n);
  auto emit = [&](int col, std::vector<double>& values,
                  std::vector<double>& residuals, std::vector<double>& overlaps,
                  std::vector<std::vector<double>>& vectors) {
    const double val = es.eigenvalues()(col);
    const Eigen::VectorXd s = es.eigenvectors().col(col);
    values.push_back(val);
    overlaps.push_back(std::abs(s.dot(te)));
    if (opt.want_vectors) {
      y.noalias() = v.leftCols(m) * s;
      y.normalize();
      hmatvec(g, y.data(), hy.data());
      residuals.push_back((hy - val * y).norm());
      vectors.emplace_back(y.data(), y.data() + n);
    } else {
      residuals.push_back(next_beta * std::abs(s(m - 1)));
    }
  };
  for (int i = 0; i < emit_top; ++i)
    emit(m - 1 - i, out.values, out.residuals, out.flat_overlap, out.vectors);
  for (int i = 0; i < kbot; ++i)
    emit(i, out.bottom_values, out.bottom_residuals, out.bottom_flat_overlap,
         out.bottom_vectors);
  return out;
}

void validate_eig_args(const GraphSample& g, int k, const LanczosOptions& opt) {
  if (g.N < 1) throw std::domain_error("top_k_eigenpairs: empty graph");
  if (!(g.d > 0.0)) throw std::domain_error("top_k_eigenpairs: need d > 0");
  if (k < 1) throw std::domain_error("top_k_eigenpairs: need k >= 1");
  if (k > 32) throw std::domain_error("top_k_eigenpairs: k > 32 unsupported");
  if (std::isfinite(opt.value_floor)) {
    if (opt.which != WhichEnd::kTop)
      throw std::domain_error(
          "top_k_eigenpairs: value_floor requires the top end only");
    if (opt.min_top < 1 || opt.min_top > k)
      throw std::domain_error("top_k_eigenpairs: min_top must be in [1, k]");
  }
}

}  // namespace

EdgeEigen top_k_eigenpairs(const GraphSample& g, int k,
                           const LanczosOptions& opt) {
  validate_eig_args(g, k, opt);
  if (g.N <= std::max(64, 4 * k + 8)) return dense_solve(g, k, opt);
  return lanczos_solve(g, k, opt);
}

EdgeEigen top_k_eigenpairs(const GraphSample& g, int k, WhichEnd which) {
  LanczosOptions opt;
  opt.which = which;
  return top_k_eigenpairs(g, k, opt);
}

RestrictedPair restricted_eigenpair(const GraphSample& g, std::uint32_t x,
                                    int r, int sign) {
  if (sign != 1 && sign != -1)
    throw std::domain_error("restricted_eigenpair: sign must be +1 or -1");
  if (g.N < 1 || x >= static_cast<std::uint64_t>(g.N))
    throw std::domain_error("restricted_eigenpair: center out of range");
  if (r < 0) throw std::domain_error("restricted_eigenpair: need r >= 0");

  const VertexProfile prof = vertex_profile(g, x, r + 1);
  const std::size_t nb = prof.ball.size();
  std::unordered_map<std::uint32_t, std::uint32_t> loc;
  loc.reserve(nb * 2);
  for (std::size_t i = 0; i < nb; ++i)
    loc.emplace(prof.ball[i], static_cast<std::uint32_t>(i));

  GraphSample sub;
  sub.N = static_cast<long long>(nb);
  sub.d = g.d;
  sub.seed = SplitMix64::stream(g.seed, x).next();
  sub.offsets.assign(nb + 1, 0);
  sub.degrees.assign(nb, 0);
  for (std::size_t i = 0; i < nb; ++i) {
    const std::uint32_t gu = prof.ball[i];
    std::uint32_t deg = 0;
    for (std::uint64_t e = g.offsets[gu]; e < g.offsets[gu + 1]; ++e)
      if (loc.count(g.adj[e])) ++deg;
    sub.degrees[i] = deg;
    sub.offsets[i + 1] = sub.offsets[i] + deg;
  }
  sub.adj.resize(sub.offsets[nb]);
  for (std::size_t i = 0; i < nb; ++i) {
    std::uint64_t pos = sub.offsets[i];
    const std::uint32_t gu = prof.ball[i];
    for (std::uint64_t e = g.offsets[gu]; e < g.offsets[gu + 1]; ++e) {
      auto it = loc.find(g.adj[e]);
      if (it != loc.end()) sub.adj[pos++] = it->second;
    }
  }
  sub.edge_count = sub.offsets[nb] / 2;

  LanczosOptions opt;
  opt.which = (sign > 0) ? WhichEnd::kTop : WhichEnd::kBottom;
  opt.want_vectors = true;
  EdgeEigen eig = (nb <= 4096) ? dense_solve(sub, 1, opt)
                               : lanczos_solve(sub, 1, opt);

  RestrictedPair out;
  out.support = prof.ball;
  out.ball_size = nb;
  out.dense_path = eig.dense_path;
  if (sign > 0) {
    out.mu = eig.values[0];
    out.w = eig.vectors[0];
    out.residual = eig.residuals[0];
  } else {
    out.mu = eig.bottom_values[0];
    out.w = eig.bottom_vectors[0];
    out.residual = eig.bottom_residuals[0];
  }
  return out;
}

TridiagBasis build_tridiag_basis(const GraphSample& g, std::uint32_t x, int r) {
  if (r < 1) throw std::domain_error("build_tridiag_basis: need r >= 1");
  const VertexProfile prof = vertex_profile(g, x, r + 1);
  if (!prof.is_tree)
    throw std::domain_error(
        "build_tridiag_basis: the ball of radius r+1 around the center is not "
        "a tree");
  // Spheres strictly inside the radius feed divisions (the F recursion and
  // the M norm ratios); the outermost spheres may be empty, in which case
  // the high-index basis vectors simply lose their indicator part.
  for (int i = 0; i <= r - 1; ++i)
    if (prof.sphere_sizes[static_cast<std::size_t>(i)] == 0)
      throw std::domain_error(
          "build_tridiag_basis: empty sphere inside the requested radius");

  TridiagBasis b;
  b.center = x;
  b.r = r;
  b.d = g.d;
  b.alpha_x = prof.alpha;
  b.beta_x = prof.beta;
  b.ball = prof.ball;
  b.level = prof.dist;
  b.nchild = prof.children;
  b.sphere_sizes = prof.sphere_sizes;

  const std::size_t nb = b.ball.size();
  std::unordered_map<std::uint32_t, std::uint32_t> loc;
  loc.reserve(nb * 2);
  for (std::size_t i = 0; i < nb; ++i)
    loc.emplace(b.ball[i], static_cast<std::uint32_t>(i));
  b.offsets.assign(nb + 1, 0);
  for (std::size_t i = 0; i < nb; ++i) {
    const std::uint32_t gu = b.ball[i];
    std::uint32_t deg = 0;
    for (std::uint64_t e = g.offsets[gu]; e < g.offsets[gu + 1]; ++e)
      if (loc.count(g.adj[e])) ++deg;
    b.offsets[i + 1] = b.offsets[i] + deg;
  }
  b.adj.resize(b.offsets[nb]);
  {
    std::vector<std::uint64_t> pos(b.offsets.begin(), b.offsets.end() - 1);
    for (std::size_t i = 0; i < nb; ++i) {
      const std::uint32_t gu = b.ball[i];
      for (std::uint64_t e = g.offsets[gu]; e < g.offsets[gu + 1]; ++e) {
        auto it = loc.find(g.adj[e]);
        if (it != loc.end()) b.adj[pos[i]++] = it->second;
      }
    }
  }

  // Vertices grouped by distance from the center.
  std::vector<std::vector<std::uint32_t>> lv(static_cast<std::size_t>(r) + 2);
  for (std::size_t i = 0; i < nb; ++i)
    lv[static_cast<std::size_t>(b.level[i])].push_back(
        static_cast<std::uint32_t>(i));

  // Level constants F_i and path sums ps(y) = sum_{z in (x,y]} (N_z - F_|z|),
  // interleaved: the recursion for F_i consumes ps on sphere i-1, which in
  // turn needs F_{i-1} from the previous step. Choosing F_i this way makes
  // each sphere's path sums add to zero, which is exactly the orthogonality
  // of the f-basis.
  b.F.assign(static_cast<std::size_t>(r), 0.0);
  b.path_sum.assign(nb, 0.0);
  b.F[0] = static_cast<double>(b.sphere_sizes[1]);
  for (int i = 1; i <= r - 1; ++i) {
    for (std::uint32_t y : lv[static_cast<std::size_t>(i) - 1]) {
      if (i - 1 == 0) {
        b.path_sum[y] = 0.0;
      } else {
        b.path_sum[y] = b.path_sum[prof.parent[y]] +
                        (static_cast<double>(b.nchild[y]) -
                         b.F[static_cast<std::size_t>(i) - 1]);
      }
    }
    double corr = 0.0;
    for (std::uint32_t y : lv[static_cast<std::size_t>(i) - 1])
      corr += (static_cast<double>(b.nchild[y]) - g.d) * b.path_sum[y];
    const double si = static_cast<double>(b.sphere_sizes[static_cast<std::size_t>(i)]);
    b.F[static_cast<std::size_t>(i)] =
        static_cast<double>(b.sphere_sizes[static_cast<std::size_t>(i) + 1]) / si +
        corr / si;
  }
  if (r >= 2) {
    for (std::uint32_t y : lv[static_cast<std::size_t>(r) - 1])
      b.path_sum[y] = b.path_sum[prof.parent[y]] +
                      (static_cast<double>(b.nchild[y]) -
                       b.F[static_cast<std::size_t>(r) - 1]);
  }

  // Basis vectors f_0..f_{r+1}: sphere indicator plus the path-sum correction
  // two levels in.
  b.f.resize(static_cast<std::size_t>(r) + 2);
  b.f_norm.assign(static_cast<std::size_t>(r) + 2, 0.0);
  for (int i = 0; i <= r + 1; ++i) {
    SparseVec& fv = b.f[static_cast<std::size_t>(i)];
    for (std::uint32_t y : lv[static_cast<std::size_t>(i)]) {
      fv.idx.push_back(y);
      fv.val.push_back(1.0);
    }
    if (i >= 3) {
      for (std::uint32_t y : lv[static_cast<std::size_t>(i) - 2]) {
        fv.idx.push_back(y);
        fv.val.push_back(b.path_sum[y]);
      }
    }
    double nsq = 0.0;
    for (double t : fv.val) nsq += t * t;
    b.f_norm[static_cast<std::size_t>(i)] = std::sqrt(nsq);
  }

  b.m_offdiag.assign(static_cast<std::size_t>(r), 0.0);
  const double sq_d = std::sqrt(g.d);
  for (int i = 0; i < r; ++i)
    b.m_offdiag[static_cast<std::size_t>(i)] =
        b.f_norm[static_cast<std::size_t>(i) + 1] /
        (sq_d * b.f_norm[static_cast<std::size_t>(i)]);

  // Defect vectors g_i, i = 4..r, supported on sphere i-3.
  for (int i = 4; i <= r; ++i) {
    SparseVec gv;
    for (std::uint32_t t : lv[static_cast<std::size_t>(i) - 3]) {
      double val = (static_cast<double>(b.nchild[t]) -
                    b.F[static_cast<std::size_t>(i) - 1]) *
                   b.path_sum[t];
      for (std::uint64_t e = b.offsets[t]; e < b.offsets[t + 1]; ++e) {
        const std::uint32_t y = b.adj[e];
        if (b.level[y] == b.level[t] + 1)
          val += static_cast<double>(b.nchild[y]) -
                 b.F[static_cast<std::size_t>(i) - 2];
      }
      gv.idx.push_back(t);
      gv.val.push_back(val);
    }
    b.g.push_back(std::move(gv));
  }
  return b;
}

namespace {

// Scatter a sparse vector into dense storage (entries assumed distinct).
void scatter_add(const SparseVec& v, double scale, std::vector<double>& dense) {
  for (std::size_t i = 0; i < v.idx.size(); ++i)
    dense[v.idx[i]] += scale * v.val[i];
}

}  // namespace

BasisIdentityReport verify_basis_identities(const TridiagBasis& b, double gamma, double env) {
  BasisIdentityReport rep;
  rep.r = b.r;
  const std::size_t nb = b.ball.size();
  std::vector<double> work(nb, 0.0);

  // Re-derive the path sums from the stored levels and children counts, so
  // the defect rebuild below does not reuse the construction-time buffer.
  std::vector<double> ps(nb, 0.0);
  {
    std::vector<std::uint32_t> order(nb);
    for (std::size_t i = 0; i < nb; ++i) order[i] = static_cast<std::uint32_t>(i);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t c) {
      return b.level[a] < b.level[c];
    });
    for (std::uint32_t u : order) {
      const int lu = b.level[u];
      if (lu == 0 || lu > b.r - 1) continue;
      double parent_ps = 0.0;
      for (std::uint64_t e = b.offsets[u]; e < b.offsets[u + 1]; ++e)
        if (b.level[b.adj[e]] == lu - 1) parent_ps = ps[b.adj[e]];
      ps[u] = parent_ps + (static_cast<double>(b.nchild[u]) -
                           b.F[static_cast<std::size_t>(lu)]);
    }
  }

  // Pairwise orthogonality, normalized.
  for (std::size_t i = 0; i < b.f.size(); ++i) {
    std::fill(work.begin(), work.end(), 0.0);
    scatter_add(b.f[i], 1.0, work);
    for (std::size_t j = i + 1; j < b.f.size(); ++j) {
      double dot = 0.0;
      for (std::size_t t = 0; t < b.f[j].idx.size(); ++t)
        dot += b.f[j].val[t] * work[b.f[j].idx[t]];
      const double denom = b.f_norm[i] * b.f_norm[j];
      if (denom > 0.0)
        rep.max_orthogonality =
            std::max(rep.max_orthogonality, std::abs(dot) / denom);
    }
  }

  // Three-term identity A f_i = f_{i+1} + F_{i-1} f_{i-1} + g_i, checked
  // entrywise with the defect taken from the stored list (zero for i <= 3).
  std::vector<double> resid(nb, 0.0);
  for (int i = 1; i <= b.r; ++i) {
    std::fill(resid.begin(), resid.end(), 0.0);
    const SparseVec& fi = b.f[static_cast<std::size_t>(i)];
    for (std::size_t t = 0; t < fi.idx.size(); ++t) {
      const std::uint32_t u = fi.idx[t];
      const double val = fi.val[t];
      for (std::uint64_t e = b.offsets[u]; e < b.offsets[u + 1]; ++e)
        resid[b.adj[e]] += val;
    }
    scatter_add(b.f[static_cast<std::size_t>(i) + 1], -1.0, resid);
    scatter_add(b.f[static_cast<std::size_t>(i) - 1],
                -b.F[static_cast<std::size_t>(i) - 1], resid);

    if (i >= 4) {
      const SparseVec& gi = b.g[static_cast<std::size_t>(i) - 4];
      // Support of the residual route must stay on sphere i-3.
      for (std::size_t u = 0; u < nb; ++u)
        if (std::abs(resid[u]) > 1e-11 && b.level[u] != i - 3)
          rep.supp_ok = false;
      // <g_i, f_{i-3}> normalized against the norms.
      double dot = 0.0, gnsq = 0.0;
      std::fill(work.begin(), work.end(), 0.0);
      scatter_add(b.f[static_cast<std::size_t>(i) - 3], 1.0, work);
      for (std::size_t t = 0; t < gi.idx.size(); ++t) {
        dot += gi.val[t] * work[gi.idx[t]];
        gnsq += gi.val[t] * gi.val[t];
      }
      if (gnsq > 0.0)
        rep.max_f_g_inner = std::max(
            rep.max_f_g_inner,
            std::abs(dot) /
                (std::sqrt(gnsq) * b.f_norm[static_cast<std::size_t>(i) - 3]));
      rep.g_norm_sq.push_back(gnsq);
      const double denom = env *
          static_cast<double>(b.sphere_sizes[static_cast<std::size_t>(i) - 3]) *
          std::pow(b.d, 2.0 + 4.0 * gamma) * static_cast<double>(i) *
          static_cast<double>(i);
      rep.g_envelope_ratio.push_back(denom > 0.0 ? gnsq / denom : 0.0);

      // Rebuild g_i from the level formula with the re-derived path sums and
      // compare against the stored entries.
      for (std::size_t t = 0; t < gi.idx.size(); ++t) {
        const std::uint32_t u = gi.idx[t];
        double val = (static_cast<double>(b.nchild[u]) -
                      b.F[static_cast<std::size_t>(i) - 1]) *
                     ps[u];
        for (std::uint64_t e = b.offsets[u]; e < b.offsets[u + 1]; ++e) {
          const std::uint32_t y = b.adj[e];
          if (b.level[y] == b.level[u] + 1)
            val += static_cast<double>(b.nchild[y]) -
                   b.F[static_cast<std::size_t>(i) - 2];
        }
        rep.max_dual_route_dev =
            std::max(rep.max_dual_route_dev, std::abs(val - gi.val[t]));
      }

      scatter_add(gi, -1.0, resid);
      double dev = 0.0;
      for (double t : resid) dev = std::max(dev, std::abs(t));
      rep.max_identity_dev = std::max(rep.max_identity_dev, dev);
    } else {
      double dev = 0.0;
      for (double t : resid) dev = std::max(dev, std::abs(t));
      rep.max_low_g = std::max(rep.max_low_g, dev);
      rep.max_identity_dev = std::max(rep.max_identity_dev, dev);
    }
  }
  return rep;
}

double compare_M_Z(const TridiagBasis& b, double d) {
  if (!(d > 0.0)) throw std::domain_error("compare_M_Z: need d > 0");
  const double frak = std::sqrt(1.0 + 1.0 / d);
  double dev = 0.0;
  for (int i = 0; i < b.r; ++i) {
    double z;
    if (i == 0)
      z = std::sqrt(b.alpha_x);
    else if (i == 1)
      z = std::sqrt(b.beta_x);
    else
      z = frak;
    dev = std::max(dev, std::abs(b.m_offdiag[static_cast<std::size_t>(i)] - z));
  }
  return dev;
}

StrayReport stray_estimate(const GraphSample& g, const EdgeEigen& eigen,
                           double overlap_min) {
  if (!(g.d >= 4.0)) throw std::domain_error("stray_estimate: need d >= 4");
  if (eigen.values.empty())
    throw std::domain_error("stray_estimate: no top eigenpairs supplied");
  std::size_t best = 0;
  for (std::size_t i = 1; i < eigen.flat_overlap.size(); ++i)
    if (eigen.flat_overlap[i] > eigen.flat_overlap[best]) best = i;
  StrayReport s;
  s.nu_hat = eigen.values[best];
  s.overlap = eigen.flat_overlap[best];
  const double d = g.d;
  s.predictor = std::sqrt(d) + 1.0 / std::sqrt(d) + std::pow(d, -1.5);
  s.flat_distance = std::sqrt(std::max(0.0, 2.0 - 2.0 * s.overlap));
  s.separated = s.overlap >= overlap_min;
  if (!s.separated) s.message = "stray not separated";
  return s;
}

StrayReport stray_estimate(const GraphSample& g, int k, double overlap_min) {
  LanczosOptions opt;
  opt.which = WhichEnd::kTop;
  opt.want_vectors = false;
  const EdgeEigen eigen = top_k_eigenpairs(g, k, opt);
  return stray_estimate(g, eigen, overlap_min);
}

LocalizationProfile localization_profile(const GraphSample& g,
                                         const std::vector<double>& w,
                                         std::uint32_t x, int r_max,
                                         double sigma) {
  if (w.size() != static_cast<std::size_t>(g.N))
    throw std::domain_error("localization_profile: vector length mismatch");
  if (x >= static_cast<std::uint64_t>(g.N))
    throw std::domain_error("localization_profile: center out of range");
  if (r_max < 0) throw std::domain_error("localization_profile: need r_max >= 0");
  if (!(sigma > 2.0))
    throw std::domain_error("localization_profile: need sigma > 2");
  double nsq = 0.0;
  for (double t : w) nsq += t * t;
  if (std::abs(nsq - 1.0) > 1e-6)
    throw std::domain_error("localization_profile: vector must be unit length");

  // Breadth-first sweep out to r_max, accumulating per-sphere statistics.
  std::vector<int> dist(static_cast<std::size_t>(g.N), -1);
  std::vector<std::uint32_t> queue;
  queue.push_back(x);
  dist[x] = 0;
  std::vector<double> mass_in(static_cast<std::size_t>(r_max) + 1, 0.0);
  std::vector<double> sphere_sum(static_cast<std::size_t>(r_max) + 1, 0.0);
  std::vector<double> sphere_size(static_cast<std::size_t>(r_max) + 1, 0.0);
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const std::uint32_t u = queue[head];
    const int du = dist[u];
    mass_in[static_cast<std::size_t>(du)] += w[u] * w[u];
    sphere_sum[static_cast<std::size_t>(du)] += w[u];
    sphere_size[static_cast<std::size_t>(du)] += 1.0;
    if (du == r_max) continue;
    for (std::uint64_t e = g.offsets[u]; e < g.offsets[u + 1]; ++e) {
      const std::uint32_t z = g.adj[e];
      if (dist[z] < 0) {
        dist[z] = du + 1;
        queue.push_back(z);
      }
    }
  }
  LocalizationProfile out;
  out.out_mass.resize(static_cast<std::size_t>(r_max) + 1);
  // Accumulate the complement directly (never 1 - inside, which would turn
  // roundoff in the unit norm into a sqrt(eps)-sized floor).
  double beyond = 0.0;
  for (std::size_t z = 0; z < w.size(); ++z)
    if (dist[z] < 0) beyond += w[z] * w[z];
  double out_sq = beyond;
  for (int i = r_max; i >= 0; --i) {
    out.out_mass[static_cast<std::size_t>(i)] = std::sqrt(out_sq);
    out_sq += mass_in[static_cast<std::size_t>(i)];
  }

  // Radial ansatz: coefficient u_k on the normalized indicator of sphere k.
  const double root = std::sqrt(sigma * sigma - 4.0);
  out.q = 2.0 / (sigma + root);
  std::vector<double> u(static_cast<std::size_t>(r_max) + 1, 0.0);
  u[0] = 1.0;
  const double alpha_x = static_cast<double>(g.degrees[x]) / g.d;
  if (r_max >= 1 && alpha_x > 0.0) {
    u[1] = sigma / std::sqrt(alpha_x);
    for (int kk = 2; kk <= r_max; ++kk)
      u[static_cast<std::size_t>(kk)] =
          out.q * u[static_cast<std::size_t>(kk) - 1];
  }
  double unorm_sq = 0.0, inner = 0.0;
  for (int i = 0; i <= r_max; ++i) {
    const std::size_t ii = static_cast<std::size_t>(i);
    if (sphere_size[ii] > 0.0 && u[ii] != 0.0) {
      unorm_sq += u[ii] * u[ii];
      inner += u[ii] * sphere_sum[ii] / std::sqrt(sphere_size[ii]);
    }
  }
  if (unorm_sq > 0.0) {
    const double cosang = std::abs(inner) / std::sqrt(unorm_sq);
    out.radial_residual =
        std::sqrt(std::max(0.0, 2.0 - 2.0 * std::min(1.0, cosang)));
  }
  return out;
}

PerturbationReport perturbation_check(const std::vector<double>& m_dense,
                                      int n, double lambda,
                                      const std::vector<double>& v,
                                      double delta, double pert_c) {
  if (n < 1) throw std::domain_error("perturbation_check: need n >= 1");
  if (m_dense.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n))
    throw std::domain_error("perturbation_check: matrix size mismatch");
  if (v.size() != static_cast<std::size_t>(n))
    throw std::domain_error("perturbation_check: vector size mismatch");
  if (!(delta > 0.0)) throw std::domain_error("perturbation_check: need delta > 0");

  using RowMat =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMat> m(m_dense.data(), n, n);
  double scale = 0.0, asym = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      scale = std::max(scale, std::abs(m(i, j)));
      asym = std::max(asym, std::abs(m(i, j) - m(j, i)));
    }
  if (asym > 1e-10 * (1.0 + scale))
    throw std::domain_error("perturbation_check: matrix must be self-adjoint");
  Eigen::Map<const Eigen::VectorXd> vv(v.data(), n);
  if (std::abs(vv.norm() - 1.0) > 1e-6)
    throw std::domain_error("perturbation_check: vector must be unit length");

  PerturbationReport rep;
  Eigen::VectorXd rv = m * vv - lambda * vv;
  rep.eps = rv.norm();
  rep.correction = vv.dot(rv);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  int inside = 0;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const double mu = es.eigenvalues()(i);
    if (std::abs(mu - lambda) < delta) ++inside;
    if (std::abs(mu - lambda) < best) {
      best = std::abs(mu - lambda);
      rep.mu = mu;
    }
  }
  rep.preconditions_ok = (inside == 1) && (delta >= 5.0 * rep.eps);
  rep.lhs = std::abs(rep.mu - lambda - rep.correction);
  rep.bound = pert_c * rep.eps * rep.eps / delta;
  rep.ok = rep.preconditions_ok && rep.lhs <= rep.bound;
  return rep;
}

}  // namespace spedge

// Copyright (c) 2026 The trplk contributors
// SPDX-License-Identifier: Apache-2.0

#include "trplk/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

#include "trplk/dense.hpp"

namespace trplk {

namespace {

/// Number of eigenvalues of the tridiagonal matrix strictly below x.
std::size_t sturm_count(std::span<const double> diag, std::span<const double> off, double x, double pivmin) {
  std::size_t count = 0;
  double q = diag[0] - x;
  if (std::abs(q) < pivmin) q = -pivmin;
  if (q < 0.0) ++count;
  for (std::size_t i = 1; i < diag.size(); ++i) {
    q = diag[i] - x - off[i - 1] * off[i - 1] / q;
    if (std::abs(q) < pivmin) q = -pivmin;
    if (q < 0.0) ++count;
  }
  return count;
}

/// Solves (T - shift I) y = rhs in place by Gaussian elimination with
/// partial pivoting; zero pivots are replaced by `tiny`.
void tridiagonal_shifted_solve(std::span<const double> diag, std::span<const double> off, double shift, double tiny,
                               std::span<double> rhs) {
  const std::size_t k = diag.size();
  Vector d(k), du(off.begin(), off.end()), dl(off.begin(), off.end()), du2(k > 2 ? k - 2 : 0, 0.0);
  for (std::size_t i = 0; i < k; ++i) d[i] = diag[i] - shift;
  for (std::size_t i = 0; i + 1 < k; ++i) {
    if (std::abs(d[i]) >= std::abs(dl[i])) {
      if (d[i] == 0.0) d[i] = tiny;
      const double f = dl[i] / d[i];
      d[i + 1] -= f * du[i];
      rhs[i + 1] -= f * rhs[i];
    } else {
      const double f = d[i] / dl[i];
      d[i] = dl[i];
      const double tmp = d[i + 1];
      d[i + 1] = du[i] - f * tmp;
      if (i + 2 < k) {
        du2[i] = du[i + 1];
        du[i + 1] = -f * du[i + 1];
      }
      du[i] = tmp;
      std::swap(rhs[i], rhs[i + 1]);
      rhs[i + 1] -= f * rhs[i];
    }
  }
  if (d[k - 1] == 0.0) d[k - 1] = tiny;
  rhs[k - 1] /= d[k - 1];
  if (k < 2) return;
  rhs[k - 2] = (rhs[k - 2] - du[k - 2] * rhs[k - 1]) / d[k - 2];
  for (std::size_t i = k - 2; i-- > 0;) rhs[i] = (rhs[i] - du[i] * rhs[i + 1] - du2[i] * rhs[i + 2]) / d[i];
}

double tridiagonal_norm(std::span<const double> diag, std::span<const double> off) {
  double nrm = 0.0;
  for (std::size_t i = 0; i < diag.size(); ++i) {
    double row = std::abs(diag[i]);
    if (i > 0) row += std::abs(off[i - 1]);
    if (i < off.size()) row += std::abs(off[i]);
    nrm = std::max(nrm, row);
  }
  return nrm;
}

Block start_block(std::size_t n, std::size_t k, const SolverConfig& cfg, const Block* initial) {
  if (initial) {
    if (initial->rows() != n) throw std::invalid_argument("initial block has wrong row count");
    return *initial;
  }
  return random_block(n, k, cfg.seed);
}

/// Appends to the report's eigen data from explicit Ritz vectors; returns true
/// when every pair passes the explicit residual test.
bool finalize_pairs(const SparseSymMatrix& a, const SparseSymMatrix* b, Block vectors, double tol,
                    SolverReport& report) {
  report.eigenvectors = std::move(vectors);
  const std::size_t k = report.eigenvectors.cols();
  report.eigenvalues.assign(k, 0.0);
  report.residual_norms.assign(k, 0.0);
  bool ok = true;
  for (std::size_t i = 0; i < k; ++i) {
    const auto x = report.eigenvectors.col(i);
    report.eigenvalues[i] = rayleigh_quotient(a, b, x);
    report.residual_norms[i] = residual_norm(a, b, x, report.eigenvalues[i]);
    ok = ok && convergence_check(report.a_norm_f, report.residual_norms[i], tol);
  }
  return ok;
}

}  // namespace

Vector tridiagonal_lowest(std::span<const double> diag, std::span<const double> off, std::size_t k) {
  const std::size_t n = diag.size();
  if (n == 0 || off.size() + 1 != n) throw std::invalid_argument("tridiagonal_lowest: inconsistent sizes");
  k = std::min(k, n);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = (i > 0 ? std::abs(off[i - 1]) : 0.0) + (i < off.size() ? std::abs(off[i]) : 0.0);
    lo = std::min(lo, diag[i] - r);
    hi = std::max(hi, diag[i] + r);
  }
  const double scale = std::max({std::abs(lo), std::abs(hi), std::numeric_limits<double>::min()});
  const double pivmin = std::numeric_limits<double>::min() * std::max(1.0, scale * scale);
  lo -= 2.0 * std::numeric_limits<double>::epsilon() * scale;
  hi += 2.0 * std::numeric_limits<double>::epsilon() * scale;
  Vector out(k);
  for (std::size_t i = 0; i < k; ++i) {
    // i-th eigenvalue: smallest x with count(x) > i.
    double a = i > 0 ? out[i - 1] : lo, b = hi;
    a = std::max(a - 2.0 * std::numeric_limits<double>::epsilon() * scale, lo);
    while (b - a > 2.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(a), std::abs(b)) &&
           b - a > pivmin) {
      const double mid = 0.5 * (a + b);
      if (mid <= a || mid >= b) break;
      if (sturm_count(diag, off, mid, pivmin) > i)
        b = mid;
      else
        a = mid;
    }
    out[i] = 0.5 * (a + b);
  }
  return out;
}

DenseMatrix tridiagonal_eigenvectors(std::span<const double> diag, std::span<const double> off,
                                     std::span<const double> values) {
  const std::size_t n = diag.size();
  const double tnorm = std::max(tridiagonal_norm(diag, off), std::numeric_limits<double>::min());
  const double eps = std::numeric_limits<double>::epsilon();
  DenseMatrix y(n, values.size());
  Rng rng(0x5eed);
  std::size_t cluster_start = 0;
  for (std::size_t c = 0; c < values.size(); ++c) {
    if (c > 0 && values[c] - values[c - 1] > 1e-3 * tnorm) cluster_start = c;
    auto v = y.col(c);
    for (double& e : v) e = rng.symmetric();
    // Perturb coincident shifts so the solves stay distinct within a cluster.
    const double shift = values[c] + static_cast<double>(c - cluster_start) * 10.0 * eps * tnorm;
    for (int it = 0; it < 3; ++it) {
      tridiagonal_shifted_solve(diag, off, shift, eps * tnorm, v);
      for (std::size_t j = cluster_start; j < c; ++j) axpy(-dot(y.col(j), v), y.col(j), v);
      const double nrm = norm2(v);
      if (!(nrm > 0.0) || !std::isfinite(nrm)) throw NumericalError("tridiagonal_eigenvectors: inverse iteration failed");
      scale(1.0 / nrm, v);
    }
  }
  return y;
}

SolverReport unrestarted_lanczos_solve(const SparseSymMatrix& a, const SolverConfig& cfg, const BaselineOptions& opts,
                                       const Block* initial) {
  const std::size_t n = a.n();
  const std::size_t p = cfg.nev;
  if (p < 1 || p > n) throw std::invalid_argument("lanczos: nev must be in [1, n]");
  if (opts.check_interval < 1) throw std::invalid_argument("lanczos: check interval must be positive");
  SolverReport report;
  report.solver = "lanczos";
  report.a_norm_f = frobenius_norm(a);
  MatvecCounter& counter = report.counters;
  const double bound = report.a_norm_f * cfg.tol;
  const std::size_t cap = std::min(opts.max_columns, n);
  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

  Block v = Block::with_rows(n);
  Vector alpha, beta;
  {
    const Block start = start_block(n, 1, cfg, initial);
    Vector w(start.col(0).begin(), start.col(0).end());
    while (orthogonalize_in_place(w, {}, v, nullptr).breakdown) {
      w = random_vector(n, rng);
      ++report.reseeds;
    }
    v.append(w);
  }
  Vector w(n);
  std::size_t target = 0;
  while (true) {
    const std::size_t j = v.cols() - 1;
    spmv(a, v.col(j), w, counter);
    alpha.push_back(dot(v.col(j), w));
    OrthoStatus st = orthogonalize_in_place(w, {}, v, nullptr);
    const bool invariant = st.breakdown;
    const double b_next = invariant ? 0.0 : st.norm;
    const std::size_t k = v.cols();
    if (k % opts.check_interval == 0 || invariant || k == cap) {
      ++report.cycles;
      const Vector theta = tridiagonal_lowest(alpha, beta, std::min(p, k));
      const DenseMatrix y = tridiagonal_eigenvectors(alpha, beta, theta);
      target = 0;
      while (target < theta.size() && b_next * std::abs(y(k - 1, target)) <= bound) ++target;
      CycleRecord rec;
      rec.cycle = report.cycles;
      rec.matvecs = counter.matvec_count;
      rec.precond_applies = counter.precond_count;
      const std::size_t shown = std::min(target, theta.size() - 1);
      rec.target_index = shown + 1;
      rec.rho = theta[shown];
      rec.resid_norm = b_next * std::abs(y(k - 1, shown));
      report.history.push_back(rec);
      if (target == p) {
        if (finalize_pairs(a, nullptr, combine(v, y, p), cfg.tol, report)) {
          report.status = SolveStatus::converged;
          return report;
        }
      }
      if (k == cap) {
        finalize_pairs(a, nullptr, combine(v, y, theta.size()), cfg.tol, report);
        report.status = k == n ? SolveStatus::breakdown : SolveStatus::max_cycles;
        return report;
      }
    }
    if (invariant) {
      // Continue in the orthogonal complement with a fresh direction.
      bool placed = false;
      for (int attempt = 0; attempt < 10 && !placed; ++attempt) {
        w = random_vector(n, rng);
        ++report.reseeds;
        placed = !orthogonalize_in_place(w, {}, v, nullptr).breakdown;
      }
      if (!placed) {
        const std::size_t kk = v.cols();
        const Vector theta = tridiagonal_lowest(alpha, beta, std::min(p, kk));
        finalize_pairs(a, nullptr, combine(v, tridiagonal_eigenvectors(alpha, beta, theta), theta.size()), cfg.tol,
                       report);
        report.status = SolveStatus::breakdown;
        return report;
      }
    }
    beta.push_back(b_next);
    v.append(w);
  }
}

SolverReport trlan_solve(const SparseSymMatrix& a, const SolverConfig& cfg, const BaselineOptions& opts,
                         const Block* initial) {
  (void)opts;
  const std::size_t n = a.n();
  const std::size_t p = cfg.nev;
  if (p < 1 || p >= n) throw std::invalid_argument("trlan: nev must be in [1, n)");
  if (cfg.restart_size < p) throw std::invalid_argument("trlan: restart size must be at least nev");
  if (!(cfg.tol > 0.0) || cfg.max_cycles < 1) throw std::invalid_argument("trlan: invalid tolerance or cycle cap");
  const std::size_t q = std::min(cfg.max_basis, n);
  const std::size_t keep = std::min(cfg.restart_size, q - 1);
  if (keep < p) throw std::invalid_argument("trlan: basis too small for nev");

  SolverReport report;
  report.solver = "trlan";
  report.a_norm_f = frobenius_norm(a);
  MatvecCounter& counter = report.counters;
  const double bound = report.a_norm_f * cfg.tol;
  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

  // v holds the columns whose T entries are filled plus one pending vector.
  Block v = Block::with_rows(n);
  {
    const Block start = start_block(n, 1, cfg, initial);
    Vector w(start.col(0).begin(), start.col(0).end());
    while (orthogonalize_in_place(w, {}, v, nullptr).breakdown) {
      w = random_vector(n, rng);
      ++report.reseeds;
    }
    v.append(w);
  }
  DenseMatrix t;
  double last_beta = 0.0;
  Vector w(n);
  std::size_t target = 0;
  EigenDecomposition ritz;

  for (std::size_t cycle = 1; cycle <= cfg.max_cycles; ++cycle) {
    report.cycles = cycle;
    while (v.cols() <= q) {
      const std::size_t j = v.cols() - 1;
      spmv(a, v.col(j), w, counter);
      const Vector h = project(v, w);
      DenseMatrix grown(j + 1, j + 1);
      for (std::size_t c = 0; c < j; ++c)
        for (std::size_t r = 0; r < j; ++r) grown(r, c) = t(r, c);
      for (std::size_t i = 0; i <= j; ++i) grown(i, j) = grown(j, i) = h[i];
      t = std::move(grown);
      const OrthoStatus st = orthogonalize_in_place(w, {}, v, nullptr);
      last_beta = st.breakdown ? 0.0 : st.norm;
      if (st.breakdown) {
        bool placed = false;
        for (int attempt = 0; attempt < 10 && !placed && v.cols() < n; ++attempt) {
          w = random_vector(n, rng);
          ++report.reseeds;
          placed = !orthogonalize_in_place(w, {}, v, nullptr).breakdown;
        }
        if (!placed) {
          // The whole space is spanned: T carries every eigenvalue.
          v.append(Vector(n, 0.0));
          break;
        }
      }
      v.append(w);
    }
    const std::size_t filled = t.rows();
    ritz = sym_eig_small(t);
    auto estimate = [&](std::size_t i) { return last_beta * std::abs(ritz.vectors(filled - 1, i)); };
    target = 0;
    while (target < p && estimate(target) <= bound) ++target;

    CycleRecord rec;
    rec.cycle = cycle;
    rec.matvecs = counter.matvec_count;
    rec.precond_applies = counter.precond_count;
    const std::size_t shown = std::min(target, p - 1);
    rec.target_index = shown + 1;
    rec.rho = ritz.values[shown];
    rec.resid_norm = estimate(shown);
    report.history.push_back(rec);

    const Block basis = v.slice(0, filled);
    if (target == p && finalize_pairs(a, nullptr, combine(basis, ritz.vectors, p), cfg.tol, report)) {
      report.status = SolveStatus::converged;
      return report;
    }
    if (filled >= n) {
      finalize_pairs(a, nullptr, combine(basis, ritz.vectors, p), cfg.tol, report);
      report.status = SolveStatus::breakdown;
      return report;
    }
    if (cycle == cfg.max_cycles) {
      finalize_pairs(a, nullptr, combine(basis, ritz.vectors, p), cfg.tol, report);
      report.status = SolveStatus::max_cycles;
      return report;
    }
    // Thick restart: wanted Ritz vectors plus the pending Lanczos vector. The
    // arrowhead couplings reappear in the next column's inner products.
    const Vector pending(v.col(filled).begin(), v.col(filled).end());
    v = combine(basis, ritz.vectors, keep);
    v.append(pending);
    t = DenseMatrix(keep, keep);
    for (std::size_t i = 0; i < keep; ++i) t(i, i) = ritz.values[i];
  }
  return report;
}

namespace {

struct ImagedBlock {
  explicit ImagedBlock(std::size_t n) : x(Block::with_rows(n)), ax(Block::with_rows(n)), bx(Block::with_rows(n)) {}
  Block x;
  Block ax;
  Block bx;
  std::size_t cols() const { return x.cols(); }
  void append(std::span<const double> v, std::span<const double> av, std::span<const double> bv) {
    x.append(v);
    ax.append(av);
    bx.append(bv);
  }
  void append_from(const ImagedBlock& o) {
    for (std::size_t j = 0; j < o.cols(); ++j) append(o.x.col(j), o.ax.col(j), o.bx.col(j));
  }
  ImagedBlock combined(const DenseMatrix& c) const {
    ImagedBlock out(x.rows());
    out.x = combine(x, c, c.cols());
    out.ax = combine(ax, c, c.cols());
    out.bx = combine(bx, c, c.cols());
    return out;
  }
};

}  // namespace

SolverReport lobpcg_solve(const SparseSymMatrix& a, const SparseSymMatrix* b, const SolverConfig& cfg,
                          const LinearOperator* m, const BaselineOptions& opts, const Block* initial) {
  const std::size_t n = a.n();
  const std::size_t p = cfg.nev;
  if (b && b->n() != n) throw std::invalid_argument("lobpcg: B dimension mismatch");
  if (p < 1 || 3 * p > n) throw std::invalid_argument("lobpcg: need 1 <= nev and 3 nev <= n");
  if (!(cfg.tol > 0.0) || cfg.max_cycles < 1) throw std::invalid_argument("lobpcg: invalid tolerance or cycle cap");

  SolverReport report;
  report.solver = "lobpcg";
  report.a_norm_f = frobenius_norm(a);
  MatvecCounter& counter = report.counters;
  const double bound = report.a_norm_f * cfg.tol;
  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

  std::optional<LinearOperator> owned;
  if (m == nullptr) {
    owned.emplace(build_preconditioner(cfg.precond, a, b, cfg.precond.shift));
    m = &*owned;
  }

  auto b_apply = [&](std::span<const double> x) {
    Vector bx(x.begin(), x.end());
    if (b) {
      b->multiply(x, bx);
      ++counter.bmatvec_count;
    }
    return bx;
  };
  // Orthonormalizes w against `against` (images tracked) and appends it with
  // an explicit A product. Returns false on dependence.
  auto extend = [&](Vector w, const ImagedBlock& against, ImagedBlock& out) {
    Vector bw = b_apply(w);
    if (orthogonalize_in_place(w, b ? std::span<double>(bw) : std::span<double>(), against.x,
                               b ? &against.bx : nullptr)
            .breakdown)
      return false;
    if (!b) bw = w;
    out.append(w, spmv(a, w, counter), bw);
    return true;
  };

  // Initial block and Rayleigh-Ritz.
  ImagedBlock xs(n);
  {
    const Block start = start_block(n, p, cfg, initial);
    for (std::size_t j = 0; j < start.cols() && xs.cols() < p; ++j)
      extend(Vector(start.col(j).begin(), start.col(j).end()), xs, xs);
    while (xs.cols() < p) {
      ++report.reseeds;
      extend(random_vector(n, rng), xs, xs);
    }
  }
  Vector theta;
  {
    EigenDecomposition eig = sym_eig_small(inner(xs.x, xs.ax));
    xs = xs.combined(eig.vectors);
    theta = std::move(eig.values);
  }
  ImagedBlock ps(n);

  auto residual = [&](std::size_t j) {
    Vector r(xs.ax.col(j).begin(), xs.ax.col(j).end());
    axpy(-theta[j], xs.bx.col(j), r);
    return r;
  };
  auto refresh_images = [&] {
    for (ImagedBlock* blk : {&xs, &ps})
      for (std::size_t j = 0; j < blk->cols(); ++j) {
        spmv(a, blk->x.col(j), blk->ax.col(j), counter);
        const Vector bx = b_apply(blk->x.col(j));
        std::copy(bx.begin(), bx.end(), blk->bx.col(j).begin());
      }
  };
  bool refreshed = false;

  for (std::size_t iter = 0;; ++iter) {
    std::vector<Vector> active;
    std::size_t target = p;
    for (std::size_t j = 0; j < p; ++j) {
      Vector r = residual(j);
      const double rn = norm2(r);
      if (rn > bound) {
        if (target == p) target = j;
        active.push_back(std::move(r));
      }
    }
    if (iter > 0) {
      CycleRecord rec;
      rec.cycle = iter;
      rec.matvecs = counter.matvec_count;
      rec.precond_applies = counter.precond_count;
      const std::size_t shown = std::min(target, p - 1);
      rec.target_index = shown + 1;
      rec.rho = theta[shown];
      rec.resid_norm = norm2(residual(shown));
      report.history.push_back(rec);
    }
    report.cycles = iter;
    if (active.empty()) {
      if (finalize_pairs(a, b, xs.x, cfg.tol, report)) {
        report.status = SolveStatus::converged;
        return report;
      }
      if (refreshed) {
        report.status = SolveStatus::breakdown;
        return report;
      }
      // Image drift: recompute the products and keep iterating.
      refresh_images();
      refreshed = true;
      continue;
    }
    refreshed = false;
    if (iter >= cfg.max_cycles) {
      finalize_pairs(a, b, xs.x, cfg.tol, report);
      report.status = SolveStatus::max_cycles;
      return report;
    }

    ImagedBlock basis(n);
    basis.append_from(xs);
    basis.append_from(ps);
    const std::size_t fixed = basis.cols();
    for (const Vector& r : active) extend(m->apply(r, counter), basis, basis);
    for (int attempt = 0; basis.cols() == fixed && attempt < 10; ++attempt) {
      ++report.reseeds;
      extend(random_vector(n, rng), basis, basis);
    }
    if (basis.cols() == fixed) {
      finalize_pairs(a, b, xs.x, cfg.tol, report);
      report.status = SolveStatus::breakdown;
      return report;
    }

    const std::size_t k = basis.cols();
    EigenDecomposition eig = sym_eig_small(inner(basis.x, basis.ax));
    DenseMatrix c(k, p);
    for (std::size_t j = 0; j < p; ++j)
      for (std::size_t i = 0; i < k; ++i) c(i, j) = eig.values.empty() ? 0.0 : eig.vectors(i, j);

    // Third block in coefficient space: the previous Ritz vectors with their
    // components along the new ones removed, or the search directions.
    Block pc = Block::with_rows(k);
    for (std::size_t j = 0; j < p; ++j) {
      Vector col(k, 0.0);
      if (opts.lobpcg_search_directions) {
        for (std::size_t i = p; i < k; ++i) col[i] = c(i, j);
      } else {
        col[j] = 1.0;
      }
      pc.append(col);
    }
    Block cb = Block::with_rows(k);
    for (std::size_t j = 0; j < p; ++j) cb.append(c.col(j));
    Block pc_orth = Block::with_rows(k);
    Block against = cb;
    for (std::size_t j = 0; j < pc.cols(); ++j) {
      Vector col(pc.col(j).begin(), pc.col(j).end());
      if (orthogonalize_in_place(col, {}, against, nullptr).breakdown) continue;
      pc_orth.append(col);
      against.append(col);
    }
    DenseMatrix pcm(k, pc_orth.cols());
    for (std::size_t j = 0; j < pc_orth.cols(); ++j)
      for (std::size_t i = 0; i < k; ++i) pcm(i, j) = pc_orth(i, j);

    xs = basis.combined(c);
    ps = basis.combined(pcm);
    theta.assign(eig.values.begin(), eig.values.begin() + static_cast<std::ptrdiff_t>(p));

    double ortho = 0.0;
    for (std::size_t j = 0; j < p; ++j)
      for (std::size_t i = 0; i < p; ++i)
        ortho = std::max(ortho, std::abs(dot(xs.x.col(i), xs.bx.col(j)) - (i == j ? 1.0 : 0.0)));
    report.max_ortho_error = std::isnan(report.max_ortho_error) ? ortho : std::max(report.max_ortho_error, ortho);
  }
}

}  // namespace trplk

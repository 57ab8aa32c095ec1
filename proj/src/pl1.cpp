// Copyright (c) 2026 The trplk contributors
// SPDX-License-Identifier: Apache-2.0

#include "trplk/pl1.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <ostream>

#include "trplk/dense.hpp"
#include "trplk/trplk.hpp"

namespace trplk {

namespace {

Vector b_times(const SparseSymMatrix* b, std::span<const double> x) {
  Vector bx(x.begin(), x.end());
  if (b) b->multiply(x, bx);
  return bx;
}

Vector a_times(const SparseSymMatrix& a, std::span<const double> x) {
  Vector ax(x.size());
  a.multiply(x, ax);
  return ax;
}

/// A vector with its A and B images, kept consistent under linear updates.
struct Imaged {
  Vector v, av, bv;
  void scale_by(double s) {
    scale(s, v);
    scale(s, av);
    scale(s, bv);
  }
  void add(double c, const Imaged& o) {
    axpy(c, o.v, v);
    axpy(c, o.av, av);
    axpy(c, o.bv, bv);
  }
  double b_norm() const { return std::sqrt(std::max(dot(v, bv), 0.0)); }
};

/// Incremental Cholesky of the Gram matrix in column order; a column whose
/// pivot falls below `rel` of its diagonal is reported dependent.
std::vector<std::size_t> independent_columns(const DenseMatrix& s, double rel) {
  const std::size_t k = s.rows();
  std::vector<std::size_t> kept;
  DenseMatrix l(k, k);
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t r = kept.size();
    Vector row(r);
    for (std::size_t i = 0; i < r; ++i) {
      double v = s(kept[i], j);
      for (std::size_t t = 0; t < i; ++t) v -= l(i, t) * row[t];
      row[i] = v / l(i, i);
    }
    double d = s(j, j);
    for (double v : row) d -= v * v;
    if (!(d > rel * s(j, j))) continue;
    for (std::size_t t = 0; t < r; ++t) l(r, t) = row[t];
    l(r, r) = std::sqrt(d);
    kept.push_back(j);
  }
  return kept;
}

class TraceBuilder {
 public:
  TraceBuilder(const SparseSymMatrix& a, const SparseSymMatrix* b, const Pl1Config& cfg, double a_norm_f)
      : cap_(cfg.trace_max_columns), a_norm_f_(a_norm_f), lambda1_(*cfg.lambda1_ref) {
    const std::size_t n = a.n();
    trace_.w_basis = Block::with_rows(n);
    trace_.w_aimg = Block::with_rows(n);
    trace_.w_bimg = Block::with_rows(n);
    v1_ = *cfg.v1_ref;
    av1_ = a_times(a, v1_);
    bv1_ = b_times(b, v1_);
    ++trace_.counter.matvec_count;
    if (b) ++trace_.counter.bmatvec_count;
  }

  /// Adds a direction (with images) to the accumulated basis.
  void add(Imaged g) {
    if (trace_.w_basis.cols() >= cap_) {
      full_ = true;
      return;
    }
    const double norm0 = g.b_norm();
    if (!(norm0 > 0.0)) return;
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t j = 0; j < trace_.w_basis.cols(); ++j) {
        const double c = dot(trace_.w_bimg.col(j), g.v);
        axpy(-c, trace_.w_basis.col(j), g.v);
        axpy(-c, trace_.w_aimg.col(j), g.av);
        axpy(-c, trace_.w_bimg.col(j), g.bv);
      }
    const double nrm = g.b_norm();
    if (!(nrm > 1e-12 * norm0)) return;
    g.scale_by(1.0 / nrm);
    const std::size_t k = trace_.w_basis.cols();
    trace_.w_basis.append(g.v);
    trace_.w_aimg.append(g.av);
    trace_.w_bimg.append(g.bv);
    DenseMatrix grown(k + 1, k + 1);
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t i = 0; i < k; ++i) grown(i, j) = t_(i, j);
    for (std::size_t i = 0; i <= k; ++i) grown(i, k) = grown(k, i) = dot(trace_.w_basis.col(i), g.av);
    t_ = std::move(grown);
  }

  void record(std::size_t k, const Imaged& x, double rho, double resid) {
    if (full_) return;
    QuasiOptRecord rec;
    rec.k = k;
    rec.rho_xk = rho;
    rec.lambda1_ref = lambda1_;
    rec.resid_norm = resid;
    const std::size_t dim = t_.rows();
    Eigen::MatrixXd tm(dim, dim);
    for (std::size_t j = 0; j < dim; ++j)
      for (std::size_t i = 0; i < dim; ++i) tm(i, j) = 0.5 * (t_(i, j) + t_(j, i));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tm);
    rec.rho_ystar = es.eigenvalues()(0);
    // rho(x) - rho(y*) = sum_i (theta_i - theta_1) xi_i^2 / |xi|^2 in the
    // Ritz coordinates of x.
    Eigen::VectorXd coord(dim);
    for (std::size_t i = 0; i < dim; ++i) coord(i) = dot(trace_.w_bimg.col(i), x.v);
    const Eigen::VectorXd xi = es.eigenvectors().transpose() * coord;
    double num = 0.0;
    for (std::size_t i = 1; i < dim; ++i)
      num += (es.eigenvalues()(static_cast<Eigen::Index>(i)) - es.eigenvalues()(0)) * xi(static_cast<Eigen::Index>(i)) *
             xi(static_cast<Eigen::Index>(i));
    num /= xi.squaredNorm();
    // rho(x) - lambda1 = e^T (A - lambda1 B) e / x^T B x, e = x - v1 (v1^T B x).
    const double c = dot(v1_, x.bv);
    Vector e = x.v, ae = x.av, be = x.bv;
    axpy(-c, v1_, e);
    axpy(-c, av1_, ae);
    axpy(-c, bv1_, be);
    axpy(-lambda1_, be, ae);
    const double den = dot(e, ae) / dot(x.v, x.bv);
    rec.ratio = den > 1e-15 * a_norm_f_ ? std::max(num, 0.0) / den : std::numeric_limits<double>::quiet_NaN();
    trace_.records.push_back(rec);
  }

  QuasiOptTrace take() { return std::move(trace_); }

 private:
  std::size_t cap_;
  double a_norm_f_;
  double lambda1_;
  Vector v1_, av1_, bv1_;
  DenseMatrix t_;
  bool full_ = false;
  QuasiOptTrace trace_;
};

}  // namespace

Pl1Result pl1_solve(const SparseSymMatrix& a, const SparseSymMatrix* b, const LinearOperator& m_in, const Pl1Config& cfg,
                    const Vector* x0) {
  const std::size_t n = a.n();
  if (b && b->n() != n) throw std::invalid_argument("pl1_solve: B dimension mismatch");
  if (m_in.n() != n) throw std::invalid_argument("pl1_solve: preconditioner dimension mismatch");
  if (cfg.inner_steps < 1) throw std::invalid_argument("pl1_solve: inner steps must be at least 1");
  if (!(cfg.tol > 0.0)) throw std::invalid_argument("pl1_solve: tolerance must be positive");
  if (cfg.trace && (!cfg.lambda1_ref || !cfg.v1_ref || cfg.v1_ref->size() != n))
    throw std::invalid_argument("pl1_solve: the trace needs a reference eigenpair");

  Pl1Result res;
  SolverReport& report = res.report;
  report.solver = "pl1";
  report.a_norm_f = frobenius_norm(a);
  MatvecCounter& counter = report.counters;
  const double bound = report.a_norm_f * cfg.tol;
  const std::size_t m_steps = std::min(cfg.inner_steps, n - 1);

  Imaged x;
  if (x0) {
    if (x0->size() != n) throw std::invalid_argument("pl1_solve: x0 has the wrong length");
    x.v = *x0;
  } else {
    const Block start = random_block(n, 1, cfg.seed);
    x.v.assign(start.col(0).begin(), start.col(0).end());
  }
  x.bv = b_times(b, x.v);
  if (b) ++counter.bmatvec_count;
  {
    const double nrm = x.b_norm();
    if (!(nrm > 0.0)) throw std::invalid_argument("pl1_solve: x0 is zero");
    scale(1.0 / nrm, x.v);
    scale(1.0 / nrm, x.bv);
  }
  x.av = spmv(a, x.v, counter);

  std::optional<LinearOperator> projected;
  if (cfg.projected_preconditioner) projected.emplace(projected_preconditioner(m_in, b, x.v));
  const LinearOperator& m = projected ? *projected : m_in;

  double rho = dot(x.v, x.av);
  double rho_prev = rho;
  auto residual_of = [&](const Imaged& y, double theta) {
    Vector r = y.av;
    axpy(-theta, y.bv, r);
    return r;
  };
  Vector r = residual_of(x, rho);
  res.rho_history.push_back(rho);

  std::optional<TraceBuilder> trace;
  if (cfg.trace) {
    trace.emplace(a, b, cfg, report.a_norm_f);
    trace->add(x);
    trace->record(0, x, rho, norm2(r));
  }

  std::optional<Imaged> p;
  auto b_image = [&](std::span<const double> v) {
    if (b) ++counter.bmatvec_count;
    return b_times(b, v);
  };

  report.status = SolveStatus::max_cycles;
  for (std::size_t k = 0;; ++k) {
    if (norm2(r) <= bound) {
      report.status = SolveStatus::converged;
      break;
    }
    if (k >= cfg.max_cycles) break;
    report.cycles = k + 1;

    // G_k: B-orthonormal basis of K_m(M (A - rho B), M r_k) with A images.
    Block g = Block::with_rows(n), ag = Block::with_rows(n), bg = Block::with_rows(n);
    Vector u = m.apply(r, counter);
    for (std::size_t j = 0; j < m_steps; ++j) {
      Vector bu = b_image(u);
      if (orthogonalize_in_place(u, b ? std::span<double>(bu) : std::span<double>(), g, b ? &bg : nullptr)
              .breakdown)
        break;
      if (!b) bu = u;
      Vector z = spmv(a, u, counter);
      g.append(u);
      ag.append(z);
      bg.append(bu);
      if (j + 1 == m_steps) break;
      axpy(-rho, bu, z);
      u = m.apply(z, counter);
    }
    const std::size_t mg = g.cols();

    // Q_k = [x_k, G_k, p_{k-1}].
    std::vector<const double*> cols_v, cols_a, cols_b;
    cols_v.push_back(x.v.data());
    cols_a.push_back(x.av.data());
    cols_b.push_back(x.bv.data());
    for (std::size_t j = 0; j < mg; ++j) {
      cols_v.push_back(g.col(j).data());
      cols_a.push_back(ag.col(j).data());
      cols_b.push_back(bg.col(j).data());
    }
    if (p) {
      cols_v.push_back(p->v.data());
      cols_a.push_back(p->av.data());
      cols_b.push_back(p->bv.data());
    }
    const std::size_t qk = cols_v.size();
    DenseMatrix tq(qk, qk), sq(qk, qk);
    for (std::size_t j = 0; j < qk; ++j)
      for (std::size_t i = 0; i <= j; ++i) {
        const std::span<const double> vi(cols_v[i], n);
        tq(i, j) = tq(j, i) = dot(vi, std::span<const double>(cols_a[j], n));
        sq(i, j) = sq(j, i) = dot(vi, std::span<const double>(cols_b[j], n));
      }
    const std::vector<std::size_t> kept = independent_columns(sq, 1e-13);
    if (kept.size() < 2) {
      report.status = SolveStatus::breakdown;
      break;
    }
    DenseMatrix ts(kept.size(), kept.size()), ss(kept.size(), kept.size());
    for (std::size_t j = 0; j < kept.size(); ++j)
      for (std::size_t i = 0; i < kept.size(); ++i) {
        ts(i, j) = tq(kept[i], kept[j]);
        ss(i, j) = sq(kept[i], kept[j]);
      }
    const EigenDecomposition eig = sym_eig_pencil_small(ts, ss);
    Vector w(qk, 0.0);
    for (std::size_t i = 0; i < kept.size(); ++i) w[kept[i]] = eig.vectors(i, 0);

    // g_k = G_k w(2:m+1); x_{k+1} = x_k w(1) + g_k + p_{k-1} w(m+2).
    Imaged gk{Vector(n, 0.0), Vector(n, 0.0), Vector(n, 0.0)};
    for (std::size_t j = 0; j < mg; ++j) {
      axpy(w[1 + j], g.col(j), gk.v);
      axpy(w[1 + j], ag.col(j), gk.av);
      axpy(w[1 + j], bg.col(j), gk.bv);
    }
    Imaged xn = x;
    xn.scale_by(w[0]);
    xn.add(1.0, gk);
    if (p) xn.add(w[qk - 1], *p);
    const double xnrm = xn.b_norm();
    scale(1.0 / xnrm, xn.v);
    xn.av = spmv(a, xn.v, counter);
    xn.bv = b_image(xn.v);
    const double rho_next = dot(xn.v, xn.av) / dot(xn.v, xn.bv);

    Pl1Step step;
    step.k = k;
    step.basis_size = kept.size();

    // Step 7: the next search direction.
    Imaged pt = gk;
    if (p) {
      if (cfg.common_variant) {
        pt.add(w[qk - 1], *p);
      } else {
        const double den = dot(p->v, p->av) - rho_prev * dot(p->v, p->bv);
        if (std::abs(den) > 1e-14 * report.a_norm_f)
          pt.add(-(dot(p->v, gk.av) - rho_prev * dot(p->v, gk.bv)) / den, *p);
      }
    }
    const double pnrm = pt.b_norm();
    std::optional<Imaged> p_next;
    if (pnrm > 1e-14 * std::max(gk.b_norm(), std::numeric_limits<double>::min())) {
      pt.scale_by(1.0 / pnrm);
      p_next = std::move(pt);
    }
    if (p && p_next) {
      const double pa = dot(p->v, p_next->av), pb = dot(p->v, p_next->bv);
      step.conjugacy_exact = std::abs(pa - rho_prev * pb) / report.a_norm_f;
      step.conjugacy_shifted = std::abs(pa - rho * pb) / report.a_norm_f;
    }

    if (trace) trace->add(gk);
    rho_prev = rho;
    rho = rho_next;
    x = std::move(xn);
    r = residual_of(x, rho);
    p = std::move(p_next);
    res.rho_history.push_back(rho);
    step.rho = rho;
    step.resid_norm = norm2(r);
    res.steps.push_back(step);
    if (trace) trace->record(k + 1, x, rho, step.resid_norm);

    CycleRecord rec;
    rec.cycle = k + 1;
    rec.matvecs = counter.matvec_count;
    rec.precond_applies = counter.precond_count;
    rec.target_index = 1;
    rec.rho = rho;
    rec.resid_norm = step.resid_norm;
    report.history.push_back(rec);
  }

  report.eigenvectors = Block::with_rows(n);
  report.eigenvectors.append(x.v);
  report.eigenvalues = {rayleigh_quotient(a, b, x.v)};
  report.residual_norms = {residual_norm(a, b, x.v, report.eigenvalues[0])};
  if (trace) res.trace = trace->take();
  return res;
}

DirectionUpdate conjugate_direction_update(std::span<const double> g, std::span<const double> p_prev,
                                           const SparseSymMatrix& a, const SparseSymMatrix* b, double rho_prev) {
  DirectionUpdate out;
  out.p.assign(g.begin(), g.end());
  const double gnorm = std::sqrt(std::max(dot(g, b_times(b, g)), 0.0));
  if (!(gnorm > 0.0)) {
    out.degenerate = true;
    return out;
  }
  Vector shifted_p = a_times(a, p_prev);
  axpy(-rho_prev, b_times(b, p_prev), shifted_p);
  const double den = dot(p_prev, shifted_p);
  if (std::abs(den) > 1e-14 * frobenius_norm(a)) {
    axpy(-dot(shifted_p, g) / den, p_prev, out.p);
  } else {
    out.fell_back = true;
  }
  const double nrm = std::sqrt(std::max(dot(out.p, b_times(b, out.p)), 0.0));
  if (!(nrm > 1e-14 * gnorm)) {
    out.degenerate = true;
    return out;
  }
  scale(1.0 / nrm, out.p);
  return out;
}

StepResult optimal_step(std::span<const double> x, std::span<const double> p, const SparseSymMatrix& a,
                        const SparseSymMatrix* b) {
  if (x.size() != a.n() || p.size() != a.n()) throw std::invalid_argument("optimal_step: dimension mismatch");
  const Vector ax = a_times(a, x), ap = a_times(a, p), bx = b_times(b, x), bp = b_times(b, p);
  const double pap = dot(p, ap), pbx = dot(p, bx), pbp = dot(p, bp), pax = dot(p, ax);
  const double xbx = dot(x, bx), xax = dot(x, ax);
  StepResult s;
  s.a = pap * pbx - pbp * pax;
  s.b = pap * xbx - pbp * xax;
  s.c = pax * xbx - pbx * xax;
  if (!(s.c < 0.0))
    throw StepHypothesisError("optimal_step: p is not a descent direction (c(x, p) >= 0)");
  if (!(s.b > 0.0)) throw StepHypothesisError("optimal_step: b(x, p) must be positive");
  // Rationalized root: -c/b when a = 0, the positive root when a > 0 and the
  // smaller positive root when a < 0.
  s.alpha = -2.0 * s.c / (s.b + std::sqrt(std::max(0.0, s.b * s.b - 4.0 * s.a * s.c)));
  return s;
}

double conjugacy_measure(std::span<const double> pi, std::span<const double> pj, const SparseSymMatrix& a,
                         const SparseSymMatrix* b, double rho) {
  Vector w = a_times(a, pj);
  axpy(-rho, b_times(b, pj), w);
  return dot(pi, w) / frobenius_norm(a);
}

double quasi_opt_ratio(const QuasiOptTrace& trace, std::size_t k) {
  for (const QuasiOptRecord& rec : trace.records)
    if (rec.k == k) return rec.ratio;
  throw std::out_of_range("quasi_opt_ratio: step " + std::to_string(k) + " was not recorded");
}

std::pair<double, double> estimate_linear_factor(std::span<const double> rho, double lambda1, double a_norm_f) {
  const double floor = 1e-12 * a_norm_f;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  std::size_t used = 0;
  for (std::size_t k = 0; k + 1 < rho.size(); ++k) {
    const double e0 = rho[k] - lambda1, e1 = rho[k + 1] - lambda1;
    if (e0 < floor || e1 < floor) break;
    const double f = e1 / e0;
    lo = std::min(lo, f);
    hi = std::max(hi, f);
    ++used;
  }
  if (used < 3) throw std::invalid_argument("estimate_linear_factor: need at least four cycles above the rounding floor");
  return {lo, hi};
}

Vector rayleigh_gradient(const SparseSymMatrix& a, const SparseSymMatrix* b, std::span<const double> x) {
  Vector ax = a_times(a, x);
  const Vector bx = b_times(b, x);
  const double s = dot(x, bx);
  const double rho = dot(x, ax) / s;
  axpy(-rho, bx, ax);
  scale(1.0 / s, ax);
  return ax;
}

DenseMatrix rayleigh_hessian(const SparseSymMatrix& a, const SparseSymMatrix* b, std::span<const double> x) {
  const std::size_t n = a.n();
  const Vector ax = a_times(a, x), bx = b_times(b, x);
  const double s = dot(x, bx);
  const double rho = dot(x, ax) / s;
  Vector r = ax;
  axpy(-rho, bx, r);
  DenseMatrix h(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = a.row_ptr()[i]; k < a.row_ptr()[i + 1]; ++k) h(i, a.col_idx()[k]) += a.values()[k];
  if (b) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = b->row_ptr()[i]; k < b->row_ptr()[i + 1]; ++k) h(i, b->col_idx()[k]) -= rho * b->values()[k];
  } else {
    for (std::size_t i = 0; i < n; ++i) h(i, i) -= rho;
  }
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) h(i, j) = (h(i, j) - 2.0 * (bx[i] * r[j] + r[i] * bx[j]) / s) / s;
  return h;
}

LowestPair reference_lowest_pair(const SparseSymMatrix& a, const SparseSymMatrix* b) {
  const std::size_t n = a.n();
  LowestPair out;
  if (n <= 2000) {
    auto dense = [n](const SparseSymMatrix& s) {
      Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = s.row_ptr()[i]; k < s.row_ptr()[i + 1]; ++k)
          d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(s.col_idx()[k])) = s.values()[k];
      return d;
    };
    Eigen::VectorXd v;
    if (b) {
      Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(dense(a), dense(*b));
      if (es.info() != Eigen::Success) throw NumericalError("reference_lowest_pair: dense solve failed");
      out.lambda1 = es.eigenvalues()(0);
      v = es.eigenvectors().col(0);
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense(a));
      if (es.info() != Eigen::Success) throw NumericalError("reference_lowest_pair: dense solve failed");
      out.lambda1 = es.eigenvalues()(0);
      v = es.eigenvectors().col(0);
    }
    out.v1.assign(v.data(), v.data() + v.size());
  } else {
    SolverConfig cfg;
    cfg.tol = 1e-15;
    const SolverReport rep = trplk_solve(a, b, cfg);
    out.v1.assign(rep.eigenvectors.col(0).begin(), rep.eigenvectors.col(0).end());
    out.lambda1 = rep.eigenvalues[0];
  }
  const double nrm = std::sqrt(dot(out.v1, b_times(b, out.v1)));
  std::size_t big = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (std::abs(out.v1[i]) > std::abs(out.v1[big])) big = i;
  scale((out.v1[big] < 0.0 ? -1.0 : 1.0) / nrm, out.v1);
  return out;
}

Vector controlled_start(const SparseSymMatrix* b, std::span<const double> v1, double theta0, std::uint64_t seed,
                        Vector* f_out) {
  const std::size_t n = v1.size();
  const Vector bv1 = b_times(b, v1);
  const double v1n = std::sqrt(dot(v1, bv1));
  Rng rng(seed);
  Vector f = random_vector(n, rng);
  for (int pass = 0; pass < 2; ++pass) axpy(-dot(f, bv1) / (v1n * v1n), v1, f);
  scale(1.0 / std::sqrt(dot(f, b_times(b, f))), f);
  Vector x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = v1[i] / v1n * std::cos(theta0) + f[i] * std::sin(theta0);
  scale(1.0 / std::sqrt(dot(x, b_times(b, x))), x);
  if (f_out) *f_out = std::move(f);
  return x;
}

LinearOperator projected_preconditioner(const LinearOperator& m, const SparseSymMatrix* b, std::span<const double> x0) {
  auto x = std::make_shared<const Vector>(x0.begin(), x0.end());
  auto bx = std::make_shared<const Vector>(b_times(b, x0));
  const double s = dot(*x, *bx);
  if (!(s > 0.0)) throw std::invalid_argument("projected_preconditioner: x0 must be nonzero");
  auto inner_op = std::make_shared<const LinearOperator>(m);
  return {m.n(), OperatorKind::user, [x, bx, s, inner_op](std::span<const double> v, std::span<double> y) {
            Vector t(v.begin(), v.end());
            axpy(-dot(*bx, v) / s, *x, t);
            MatvecCounter scratch;
            inner_op->apply(t, y, scratch);
            const double c = dot(*x, std::span<const double>(y.data(), y.size())) / s;
            axpy(-c, *bx, y);
          }};
}

void write_quasiopt_csv(std::ostream& out, const QuasiOptTrace& trace) {
  const auto old = out.precision(17);
  out << "k,rho_xk,rho_ystar,lambda1_ref,ratio,resid_norm\n";
  for (const QuasiOptRecord& r : trace.records)
    out << r.k << ',' << r.rho_xk << ',' << r.rho_ystar << ',' << r.lambda1_ref << ',' << r.ratio << ','
        << r.resid_norm << '\n';
  out.precision(old);
}

}  // namespace trplk

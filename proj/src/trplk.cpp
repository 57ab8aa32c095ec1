// Copyright (c) 2026 The trplk contributors
// SPDX-License-Identifier: Apache-2.0

#include "trplk/trplk.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace trplk {

void CycleState::push(std::span<const double> v, std::span<const double> av, std::span<const double> bv) {
  const std::size_t k = u.cols();
  u.append(v);
  au.append(av);
  if (!bv.empty()) bu.append(bv);
  DenseMatrix grown(k + 1, k + 1);
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t i = 0; i < k; ++i) grown(i, j) = t(i, j);
  for (std::size_t i = 0; i <= k; ++i) {
    const double tik = dot(u.col(i), av);
    grown(i, k) = tik;
    grown(k, i) = tik;
  }
  t = std::move(grown);
}

namespace {

Vector b_image(const SparseSymMatrix* b, std::span<const double> w, MatvecCounter& counter) {
  if (b == nullptr) return {};
  Vector bw(w.size());
  b->multiply(w, bw);
  ++counter.bmatvec_count;
  return bw;
}

/// With B the updated image drifts from B w under heavy cancellation, so the
/// image is recomputed and the projection repeated once against it.
OrthoStatus orthogonalize_against(const CycleState& state, const SparseSymMatrix* b, Vector& w, Vector& bw,
                                  MatvecCounter& counter) {
  if (b == nullptr) return orthogonalize_in_place(w, bw, state.u, nullptr);
  const OrthoStatus st = orthogonalize_in_place(w, bw, state.u, &state.bu);
  if (st.breakdown) return st;
  b->multiply(w, bw);
  ++counter.bmatvec_count;
  const OrthoStatus refined = orthogonalize_in_place(w, bw, state.u, &state.bu);
  if (refined.breakdown) return refined;
  return {st.norm * refined.norm, false, st.passes + refined.passes};
}

}  // namespace

InnerResult inner_lanczos_projected(const SparseSymMatrix& a, const SparseSymMatrix* b, const LinearOperator& m,
                                    CycleState& state, std::size_t steps, MatvecCounter& counter) {
  InnerResult res;
  if (steps == 0) return res;
  Vector w = state.seed;
  Vector bw = b_image(b, w, counter);
  if (orthogonalize_against(state, b, w, bw, counter).breakdown) {
    res.first_breakdown = true;
    return res;
  }
  const std::size_t n = a.n();
  Vector z(n), shifted(n);
  for (std::size_t j = 0; j < steps; ++j) {
    spmv(a, w, z, counter);
    state.push(w, z, bw);
    ++res.built;
    if (j + 1 == steps) break;
    // Next direction (I - X X^T B) M (z - rho B g_j), reorthogonalized against [X, G].
    shifted = z;
    axpy(-state.rho, b ? std::span<const double>(bw) : std::span<const double>(w), shifted);
    Vector next = m.apply(shifted, counter);
    Vector bnext = b_image(b, next, counter);
    if (orthogonalize_against(state, b, next, bnext, counter).breakdown) break;
    w = std::move(next);
    bw = std::move(bnext);
  }
  return res;
}

std::size_t augment_with_prev(const SparseSymMatrix& a, const SparseSymMatrix* b, CycleState& state,
                              MatvecCounter& counter) {
  std::size_t added = 0;
  Vector z(a.n());
  for (std::size_t j = 0; j < state.x_prev.cols(); ++j) {
    Vector w(state.x_prev.col(j).begin(), state.x_prev.col(j).end());
    Vector bw = b_image(b, w, counter);
    if (orthogonalize_against(state, b, w, bw, counter).breakdown) continue;
    spmv(a, w, z, counter);
    state.push(w, z, bw);
    ++added;
  }
  state.x_prev.truncate(0);
  return added;
}

RitzPairs outer_rayleigh_ritz(const CycleState& state) {
  EigenDecomposition eig = sym_eig_small(state.t);
  return {std::move(eig.values), std::move(eig.vectors)};
}

double ritz_residual_norm(const CycleState& state, const RitzPairs& ritz, std::size_t i) {
  const std::span<const double> y = ritz.coeffs.col(i);
  Vector r = combine(state.au, y);
  const Vector bx = combine(state.bu.empty() ? state.u : state.bu, y);
  axpy(-ritz.values[i], bx, r);
  return norm2(r);
}

void restart_basis(const RitzPairs& ritz, const LinearOperator& m, CycleState& state, std::size_t keep,
                   MatvecCounter& counter) {
  keep = std::min(keep, state.size());
  const bool has_b = !state.bu.empty();
  state.u = combine(state.u, ritz.coeffs, keep);
  state.au = combine(state.au, ritz.coeffs, keep);
  if (has_b) state.bu = combine(state.bu, ritz.coeffs, keep);
  state.t = DenseMatrix(keep, keep);
  for (std::size_t i = 0; i < keep; ++i) state.t(i, i) = ritz.values[i];
  state.kept = keep;

  const std::size_t t = std::min(state.target, keep - 1);
  state.rho = ritz.values[t];
  Vector r(state.au.col(t).begin(), state.au.col(t).end());
  axpy(-state.rho, has_b ? state.bu.col(t) : state.u.col(t), r);
  state.seed = m.apply(r, counter);
}

namespace {

struct Dimensions {
  std::size_t basis;
  std::size_t restart;
  std::size_t plus_k;
};

/// Shrinks l first, then p_hat (never below p), until the basis fits in n.
Dimensions fit_dimensions(const SolverConfig& cfg, std::size_t n) {
  Dimensions d{std::min(cfg.max_basis, n), cfg.restart_size, cfg.plus_k};
  while (d.restart + d.plus_k + 1 > d.basis && d.plus_k > 0) --d.plus_k;
  while (d.restart + d.plus_k + 1 > d.basis && d.restart > cfg.nev) --d.restart;
  if (d.restart + 1 > d.basis) throw std::invalid_argument("trplk_solve: problem too small for the requested nev");
  return d;
}

void debug_measure(const SparseSymMatrix& a, const SparseSymMatrix* b, const CycleState& state, double a_norm_f,
                   CycleRecord& rec) {
  rec.ortho_error = orthonormality_error(state.u, b);
  double worst = 0.0;
  Vector au(a.n());
  for (std::size_t j = 0; j < state.size(); ++j) {
    a.multiply(state.u.col(j), au);
    for (std::size_t i = 0; i < state.size(); ++i)
      worst = std::max(worst, std::abs(dot(state.u.col(i), au) - state.t(i, j)));
  }
  rec.projection_error = worst / a_norm_f;
}

}  // namespace

SolverReport trplk_solve(const SparseSymMatrix& a, const SparseSymMatrix* b, const SolverConfig& cfg,
                         const LinearOperator* m, const Block* initial) {
  cfg.validate();
  const std::size_t n = a.n();
  if (b && b->n() != n) throw std::invalid_argument("trplk_solve: B dimension mismatch");
  if (n <= cfg.nev) throw std::invalid_argument("trplk_solve: nev must be smaller than the dimension");
  const Dimensions dims = fit_dimensions(cfg, n);
  const std::size_t p = cfg.nev;

  SolverReport report;
  report.solver = "trplk";
  report.a_norm_f = frobenius_norm(a);
  MatvecCounter& counter = report.counters;

  std::optional<LinearOperator> owned;
  const bool own_precond = m == nullptr;
  if (own_precond) {
    owned.emplace(build_preconditioner(cfg.precond, a, b, cfg.precond.shift));
    m = &*owned;
  }

  CycleState state(n);
  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

  // Step 1: Rayleigh-Ritz on the (B-)orthonormalized start block.
  const Block start = initial ? *initial : random_block(n, p, cfg.seed);
  if (start.rows() != n) throw std::invalid_argument("trplk_solve: initial block has wrong row count");
  {
    Vector z(n);
    auto try_push = [&](Vector w) {
      Vector bw = b_image(b, w, counter);
      if (orthogonalize_against(state, b, w, bw, counter).breakdown) return false;
      spmv(a, w, z, counter);
      state.push(w, z, bw);
      return true;
    };
    for (std::size_t j = 0; j < start.cols() && state.size() < dims.restart; ++j)
      try_push(Vector(start.col(j).begin(), start.col(j).end()));
    while (state.size() < p) {
      if (!try_push(random_vector(n, rng))) continue;
      ++report.reseeds;
    }
  }
  RitzPairs ritz = outer_rayleigh_ritz(state);

  // Flags converged pairs in order (soft locking); every flag drops the
  // oldest retained previous vector.
  auto lock_converged = [&] {
    while (state.target < p &&
           convergence_check(report.a_norm_f, ritz_residual_norm(state, ritz, state.target), cfg.tol)) {
      if (!state.x_prev.empty()) state.x_prev.erase(0);
      ++state.target;
    }
  };

  auto collect = [&](SolveStatus status) {
    report.status = status;
    report.eigenvectors = combine(state.u, ritz.coeffs, std::min(p, state.size()));
    const Block ax = combine(state.au, ritz.coeffs, report.eigenvectors.cols());
    const Block bx = combine(state.bu.empty() ? state.u : state.bu, ritz.coeffs, report.eigenvectors.cols());
    report.eigenvalues.assign(report.eigenvectors.cols(), 0.0);
    report.residual_norms.assign(report.eigenvectors.cols(), 0.0);
    for (std::size_t i = 0; i < report.eigenvectors.cols(); ++i) {
      const auto x = report.eigenvectors.col(i);
      report.eigenvalues[i] = dot(x, ax.col(i)) / dot(x, bx.col(i));
      report.residual_norms[i] = residual_norm(a, b, x, report.eigenvalues[i]);
    }
  };

  // True when every wanted pair also passes an explicit residual check;
  // otherwise the target moves back to the first pair that fails.
  auto verified = [&] {
    collect(SolveStatus::converged);
    for (std::size_t i = 0; i < p; ++i)
      if (!convergence_check(report.a_norm_f, report.residual_norms[i], cfg.tol)) {
        state.target = i;
        return false;
      }
    return true;
  };

  lock_converged();
  if (state.target == p && verified()) return report;

  auto per_cycle_rebuild = [&] {
    if (!own_precond || cfg.precond.rebuild != RebuildPolicy::per_cycle || cfg.precond.kind == PrecondKind::none)
      return;
    try {
      owned.emplace(build_preconditioner(cfg.precond, a, b, state.rho));
      m = &*owned;
    } catch (const Ic0Breakdown&) {
      // keep the previous factor
    }
  };

  restart_basis(ritz, *m, state, std::min(dims.restart, state.size()), counter);

  for (std::size_t cycle = 1; cycle <= cfg.max_cycles; ++cycle) {
    report.cycles = cycle;
    while (state.kept + state.x_prev.cols() + 1 > dims.basis) state.x_prev.truncate(state.x_prev.cols() - 1);
    const std::size_t steps = dims.basis - state.kept - state.x_prev.cols();

    InnerResult inner = inner_lanczos_projected(a, b, *m, state, steps, counter);
    if (inner.first_breakdown && state.size() < n) {
      for (int attempt = 0; attempt < 3 && inner.first_breakdown; ++attempt) {
        state.seed = random_vector(n, rng);
        ++report.reseeds;
        inner = inner_lanczos_projected(a, b, *m, state, steps, counter);
      }
    }
    augment_with_prev(a, b, state, counter);

    // Previous vectors for the next cycle: x_t .. x_{min(t+l-1, p)} of the
    // current thick-restart block, captured before this cycle's RR.
    const std::size_t last = std::min(state.target + dims.plus_k, p);
    for (std::size_t j = state.target; j < last && j < state.kept; ++j) state.x_prev.append(state.u.col(j));

    ritz = outer_rayleigh_ritz(state);

    CycleRecord rec;
    rec.cycle = cycle;
    rec.target_index = state.target + 1;
    rec.rho = ritz.values[state.target];
    rec.resid_norm = ritz_residual_norm(state, ritz, state.target);
    if (cfg.debug_checks) {
      debug_measure(a, b, state, report.a_norm_f, rec);
      report.max_ortho_error = std::isnan(report.max_ortho_error) ? rec.ortho_error
                                                                  : std::max(report.max_ortho_error, rec.ortho_error);
      report.max_projection_error = std::isnan(report.max_projection_error)
                                        ? rec.projection_error
                                        : std::max(report.max_projection_error, rec.projection_error);
    }

    lock_converged();
    if (state.target == p && verified()) {
      rec.matvecs = counter.matvec_count;
      rec.precond_applies = counter.precond_count;
      report.history.push_back(rec);
      return report;
    }
    if (inner.built == 0 && state.size() <= state.kept) {
      // Nothing new entered the basis: the subspace is exhausted.
      rec.matvecs = counter.matvec_count;
      rec.precond_applies = counter.precond_count;
      report.history.push_back(rec);
      collect(SolveStatus::breakdown);
      return report;
    }

    per_cycle_rebuild();
    restart_basis(ritz, *m, state, std::min(dims.restart, state.size()), counter);
    rec.matvecs = counter.matvec_count;
    rec.precond_applies = counter.precond_count;
    report.history.push_back(rec);
  }
  // After the last restart T = diag(theta) and U holds the Ritz vectors.
  ritz = outer_rayleigh_ritz(state);
  collect(SolveStatus::max_cycles);
  return report;
}

}  // namespace trplk

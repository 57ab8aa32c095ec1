// Copyright (c) 2026 The trplk contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>

#include "trplk/dense.hpp"
#include "trplk/linalg.hpp"
#include "trplk/operators.hpp"
#include "trplk/solver.hpp"
#include "trplk/sparse_matrix.hpp"

namespace trplk {

/// Working state of one thick-restart preconditioned Lanczos+K solve.
///
/// The first `kept` columns of `u` are the thick-restart block X; the inner
/// iteration appends G after them and augmentation appends the previous
/// vectors last. `au` and `bu` hold A U and B U column for column (`bu` stays
/// empty for standard problems). `t` is U^T A U, grown one column at a time.
struct CycleState {
  explicit CycleState(std::size_t n) : u(Block::with_rows(n)), au(Block::with_rows(n)), bu(Block::with_rows(n)),
                                       x_prev(Block::with_rows(n)), seed(n, 0.0) {}

  std::size_t size() const { return u.cols(); }
  /// Appends an already (B-)orthonormal column with its images.
  void push(std::span<const double> v, std::span<const double> av, std::span<const double> bv);

  Block u;
  Block au;
  Block bu;
  DenseMatrix t;
  std::size_t kept = 0;
  Block x_prev;
  /// Shift of the current cycle, the Ritz value of the target.
  double rho = 0.0;
  /// 0-based target; pairs before it are soft locked.
  std::size_t target = 0;
  /// Preconditioned residual M (A x_t - rho B x_t) that starts the next inner iteration.
  Vector seed;
};

/// Ritz values ascending with coefficient vectors Y (x_i = U Y(:, i)).
struct RitzPairs {
  Vector values;
  DenseMatrix coeffs;
};

struct InnerResult {
  /// Columns appended to the basis.
  std::size_t built = 0;
  /// The first direction was already in span(X); nothing was appended.
  bool first_breakdown = false;
};

/// Builds G, a (B-)orthonormal basis of
/// K_m((I - X X^T B) M (A - rho B), (I - X X^T B) seed), appending it to the
/// state and filling T(:, kept + j) from z = A G(:, j) as it goes. Every step
/// costs one A product and, except the last, one M product; each new direction
/// is fully reorthogonalized against [X, G]. Stops early on breakdown.
InnerResult inner_lanczos_projected(const SparseSymMatrix& a, const SparseSymMatrix* b, const LinearOperator& m,
                                    CycleState& state, std::size_t steps, MatvecCounter& counter);

/// Orthogonalizes each column of state.x_prev against the basis and appends the
/// survivors, one A product each to extend T. Dependent columns are dropped.
/// Returns the number appended.
std::size_t augment_with_prev(const SparseSymMatrix& a, const SparseSymMatrix* b, CycleState& state,
                              MatvecCounter& counter);

/// Eigen-decomposition of the symmetrized leading block of T.
RitzPairs outer_rayleigh_ritz(const CycleState& state);

/// Residual norm of Ritz pair i computed from the A and B images.
double ritz_residual_norm(const CycleState& state, const RitzPairs& ritz, std::size_t i);

/// Thick restart: keeps the first `keep` Ritz vectors as X (with T set to
/// diag(theta)), sets rho to the target Ritz value and stores the seed
/// M (A x_t - rho B x_t) for the next inner iteration.
void restart_basis(const RitzPairs& ritz, const LinearOperator& m, CycleState& state, std::size_t keep,
                   MatvecCounter& counter);

/// Thick-restart preconditioned Lanczos+K for the smallest cfg.nev eigenpairs
/// of (A, B), B = I when b is null. `m` overrides the preconditioner built from
/// cfg.precond; `initial` overrides the seeded random start block.
SolverReport trplk_solve(const SparseSymMatrix& a, const SparseSymMatrix* b, const SolverConfig& cfg,
                         const LinearOperator* m = nullptr, const Block* initial = nullptr);

}  // namespace trplk

// Copyright (c) 2026 The trplk contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <utility>

#include "trplk/linalg.hpp"
#include "trplk/operators.hpp"
#include "trplk/solver.hpp"
#include "trplk/sparse_matrix.hpp"

namespace trplk {

/// Knobs specific to the reference solvers. The shared tunables (nev, basis
/// size, restart size, tolerance, seed, cycle cap) come from SolverConfig;
/// plus_k is ignored.
struct BaselineOptions {
  /// Unrestarted Lanczos: Rayleigh-Ritz every this many steps.
  std::size_t check_interval = 10;
  /// Unrestarted Lanczos: hard cap on stored basis vectors.
  std::size_t max_columns = 5000;
  /// LOBPCG: use search directions P_i = X_i - X_{i-1} C in place of the
  /// previous Ritz vectors. The spans agree in exact arithmetic.
  bool lobpcg_search_directions = false;
};

/// Full-reorthogonalization Lanczos without restarts on the standard problem.
/// One history record per Rayleigh-Ritz check.
SolverReport unrestarted_lanczos_solve(const SparseSymMatrix& a, const SolverConfig& cfg,
                                       const BaselineOptions& opts = {}, const Block* initial = nullptr);

/// Thick-restart Lanczos: keeps restart_size Ritz vectors and the last Lanczos
/// vector at every restart, max_basis columns per cycle.
SolverReport trlan_solve(const SparseSymMatrix& a, const SolverConfig& cfg, const BaselineOptions& opts = {},
                         const Block* initial = nullptr);

/// LOBPCG with block size nev on (A, B); `m` overrides the preconditioner built
/// from cfg.precond. One history record per iteration.
SolverReport lobpcg_solve(const SparseSymMatrix& a, const SparseSymMatrix* b, const SolverConfig& cfg,
                          const LinearOperator* m = nullptr, const BaselineOptions& opts = {},
                          const Block* initial = nullptr);

/// Lowest k eigenvalues (ascending) of the symmetric tridiagonal matrix with
/// diagonal `diag` and off-diagonal `off` by Sturm bisection.
Vector tridiagonal_lowest(std::span<const double> diag, std::span<const double> off, std::size_t k);

/// Unit eigenvectors for the given eigenvalues by inverse iteration; vectors of
/// nearby eigenvalues are orthogonalized against each other. Column i matches
/// values[i].
DenseMatrix tridiagonal_eigenvectors(std::span<const double> diag, std::span<const double> off,
                                     std::span<const double> values);

}  // namespace trplk

// Copyright (c) 2026 The trplk contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "trplk/linalg.hpp"
#include "trplk/operators.hpp"
#include "trplk/sparse_matrix.hpp"

namespace trplk {

/// Tunables shared by the restarted solvers. Defaults follow the desk-scale
/// experiment settings: basis 18, restart 8, one previous vector, 1e-14.
struct SolverConfig {
  /// Number of wanted (smallest) eigenpairs, p.
  std::size_t nev = 1;
  /// Maximum basis size q.
  std::size_t max_basis = 18;
  /// Ritz vectors kept at restart, p_hat (p <= p_hat < q).
  std::size_t restart_size = 8;
  /// Previous Ritz vectors retained for locally optimal restarting, l.
  std::size_t plus_k = 1;
  /// Stopping test ||A x - theta B x|| <= ||A||_F * tol.
  double tol = 1e-14;
  std::size_t max_cycles = 5000;
  std::uint64_t seed = 12;
  PreconditionerSpec precond;
  /// Recompute U^T B U and U^T A U explicitly at every Rayleigh-Ritz step
  /// (uncounted) and record the deviations.
  bool debug_checks = false;

  /// Throws std::invalid_argument when the tunables are inconsistent.
  void validate() const;
  /// Inner steps per steady-state cycle, q - p_hat - l.
  std::size_t inner_steps() const { return max_basis - restart_size - plus_k; }
};

enum class SolveStatus { converged, max_cycles, breakdown };
std::string_view to_string(SolveStatus status);

struct CycleRecord {
  std::size_t cycle = 0;
  /// Cumulative counts at the end of the cycle.
  std::size_t matvecs = 0;
  std::size_t precond_applies = 0;
  /// 1-based index of the pair being targeted during the cycle.
  std::size_t target_index = 1;
  /// Ritz value of the target after the cycle's Rayleigh-Ritz step.
  double rho = 0.0;
  double resid_norm = 0.0;
  /// Debug-mode deviations; NaN when not measured.
  double ortho_error = std::numeric_limits<double>::quiet_NaN();
  double projection_error = std::numeric_limits<double>::quiet_NaN();
};

struct SolverReport {
  std::string solver;
  SolveStatus status = SolveStatus::max_cycles;
  Vector eigenvalues;
  Block eigenvectors;
  /// ||A x_i - theta_i B x_i||, recomputed from the returned vectors.
  Vector residual_norms;
  std::vector<CycleRecord> history;
  MatvecCounter counters;
  std::size_t cycles = 0;
  double a_norm_f = 0.0;
  /// Random directions injected after a breakdown.
  std::size_t reseeds = 0;
  /// Largest debug-mode deviations across all cycles (NaN when not measured).
  double max_ortho_error = std::numeric_limits<double>::quiet_NaN();
  double max_projection_error = std::numeric_limits<double>::quiet_NaN();
};

/// ||r|| <= ||A||_F * tol; equality passes.
bool convergence_check(double a_norm_f, double resid_norm, double tol);

/// Explicit residual norm ||A x - theta B x|| without touching any counter.
double residual_norm(const SparseSymMatrix& a, const SparseSymMatrix* b, std::span<const double> x, double theta);

/// Rayleigh quotient x^T A x / x^T B x without touching any counter.
double rayleigh_quotient(const SparseSymMatrix& a, const SparseSymMatrix* b, std::span<const double> x);

}  // namespace trplk

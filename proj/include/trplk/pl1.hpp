// Copyright (c) 2026 The trplk contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "trplk/linalg.hpp"
#include "trplk/operators.hpp"
#include "trplk/solver.hpp"
#include "trplk/sparse_matrix.hpp"

namespace trplk {

/// Raised when optimal_step is called with a direction that violates its
/// hypotheses (not a descent direction, or b(x, p) <= 0).
class StepHypothesisError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct Pl1Config {
  /// Krylov steps per cycle, m.
  std::size_t inner_steps = 1;
  /// Stop when ||r_k|| <= ||A||_F * tol.
  double tol = 1e-14;
  std::size_t max_cycles = 5000;
  /// Seed for the random start when no x0 is given.
  std::uint64_t seed = 12;
  /// Use p_k = g_k + p_{k-1} w(m+2) instead of the conjugated update.
  bool common_variant = false;
  /// Replace M by P^T M P with P = I - x0 x0^T B / (x0^T B x0).
  bool projected_preconditioner = false;
  /// Record the quasi-optimality trace. Needs lambda1_ref and v1_ref.
  bool trace = false;
  /// Maximum columns of the accumulated trace basis.
  std::size_t trace_max_columns = 300;
  std::optional<double> lambda1_ref;
  std::optional<Vector> v1_ref;
};

/// Diagnostics of one PL+1 cycle k (x_k -> x_{k+1}).
struct Pl1Step {
  std::size_t k = 0;
  /// rho_{k+1} and ||r_{k+1}||.
  double rho = 0.0;
  double resid_norm = 0.0;
  /// |p_{k-1}^T (A - rho_{k-1} B) p_k| / ||A||_F; NaN at k = 0.
  double conjugacy_exact = std::numeric_limits<double>::quiet_NaN();
  /// |p_{k-1}^T (A - rho_k B) p_k| / ||A||_F; NaN at k = 0.
  double conjugacy_shifted = std::numeric_limits<double>::quiet_NaN();
  /// Columns of Q_k that survived the dependence test.
  std::size_t basis_size = 0;
};

struct QuasiOptRecord {
  std::size_t k = 0;
  double rho_xk = 0.0;
  double rho_ystar = 0.0;
  double lambda1_ref = 0.0;
  /// (rho(x_k) - rho(y_k*)) / (rho(x_k) - lambda1); NaN once x_k is converged.
  double ratio = 0.0;
  double resid_norm = 0.0;
};

struct QuasiOptTrace {
  /// B-orthonormal basis of span{x0, g_0, ..., g_{k-1}} and its images.
  Block w_basis;
  Block w_aimg;
  Block w_bimg;
  std::vector<QuasiOptRecord> records;
  /// B products spent on the trace only.
  MatvecCounter counter;
};

struct Pl1Result {
  SolverReport report;
  std::vector<Pl1Step> steps;
  /// rho_0, rho_1, ...
  Vector rho_history;
  std::optional<QuasiOptTrace> trace;
};

/// Preconditioned Lanczos+1 for the lowest pair of (A, B), B = I when null.
/// Each cycle costs m + 1 A products and m preconditioner applications.
Pl1Result pl1_solve(const SparseSymMatrix& a, const SparseSymMatrix* b, const LinearOperator& m, const Pl1Config& cfg,
                    const Vector* x0 = nullptr);

struct DirectionUpdate {
  Vector p;
  /// g was zero or the conjugated direction vanished.
  bool degenerate = false;
  /// The conjugating denominator was too small and g was used as is.
  bool fell_back = false;
};

/// B-normalized g - [p^T (A - rho B) g / p^T (A - rho B) p] p.
DirectionUpdate conjugate_direction_update(std::span<const double> g, std::span<const double> p_prev,
                                           const SparseSymMatrix& a, const SparseSymMatrix* b, double rho_prev);

struct StepResult {
  double alpha = 0.0;
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};

/// Minimizer of rho(x + alpha p) over alpha > 0 from the quadratic
/// a alpha^2 + b alpha + c whose sign matches the derivative.
StepResult optimal_step(std::span<const double> x, std::span<const double> p, const SparseSymMatrix& a,
                        const SparseSymMatrix* b);

/// p_i^T (A - rho B) p_j / ||A||_F.
double conjugacy_measure(std::span<const double> pi, std::span<const double> pj, const SparseSymMatrix& a,
                         const SparseSymMatrix* b, double rho);

/// Ratio of record k; throws when k was not recorded.
double quasi_opt_ratio(const QuasiOptTrace& trace, std::size_t k);

/// (min, max) of (rho_{k+1} - lambda1) / (rho_k - lambda1) over consecutive
/// cycles whose error is still above 1e-12 ||A||_F. Throws when fewer than
/// three ratios are available.
std::pair<double, double> estimate_linear_factor(std::span<const double> rho, double lambda1, double a_norm_f);

/// Gradient of rho(x) / 2: (A - rho B) x / (x^T B x).
Vector rayleigh_gradient(const SparseSymMatrix& a, const SparseSymMatrix* b, std::span<const double> x);

/// Hessian of rho(x) / 2 as a dense matrix (small n only).
DenseMatrix rayleigh_hessian(const SparseSymMatrix& a, const SparseSymMatrix* b, std::span<const double> x);

struct LowestPair {
  double lambda1 = 0.0;
  /// B-normalized eigenvector.
  Vector v1;
};

/// Lowest eigenpair by a dense decomposition for n <= 2000, otherwise by a
/// tightly converged TRPL+K solve.
LowestPair reference_lowest_pair(const SparseSymMatrix& a, const SparseSymMatrix* b);

/// v1 cos(theta0) + f sin(theta0) with f a seeded random B-unit vector
/// B-orthogonal to v1. The returned vector is B-normalized; `f_out` receives f.
Vector controlled_start(const SparseSymMatrix* b, std::span<const double> v1, double theta0, std::uint64_t seed,
                        Vector* f_out = nullptr);

/// P^T M P with P = I - x0 x0^T B / (x0^T B x0).
LinearOperator projected_preconditioner(const LinearOperator& m, const SparseSymMatrix* b, std::span<const double> x0);

/// CSV with header k,rho_xk,rho_ystar,lambda1_ref,ratio,resid_norm.
void write_quasiopt_csv(std::ostream& out, const QuasiOptTrace& trace);

}  // namespace trplk

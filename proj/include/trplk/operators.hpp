// Copyright (c) 2026 The trplk contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string_view>

#include "trplk/linalg.hpp"
#include "trplk/sparse_matrix.hpp"

namespace trplk {

enum class OperatorKind { matrix, jacobi, ic0, identity, user };

/// Immutable linear operator of dimension n.
///
/// Applications through `apply` are tallied: kind `matrix` counts as a
/// matrix-vector product, every other kind as a preconditioner application.
class LinearOperator {
 public:
  using ApplyFn = std::function<void(std::span<const double>, std::span<double>)>;

  LinearOperator(std::size_t n, OperatorKind kind, ApplyFn fn) : n_(n), kind_(kind), fn_(std::move(fn)) {}

  static LinearOperator identity(std::size_t n);
  static LinearOperator from_matrix(std::shared_ptr<const SparseSymMatrix> a);
  /// User-supplied SPD operator; counted as a preconditioner.
  static LinearOperator user(std::size_t n, ApplyFn fn) { return {n, OperatorKind::user, std::move(fn)}; }

  std::size_t n() const { return n_; }
  OperatorKind kind() const { return kind_; }

  void apply(std::span<const double> x, std::span<double> y, MatvecCounter& counter) const;
  Vector apply(std::span<const double> x, MatvecCounter& counter) const;

 private:
  std::size_t n_;
  OperatorKind kind_;
  ApplyFn fn_;
};

/// apply_operator(M, x, counter) == M.apply(x, counter)
inline Vector apply_operator(const LinearOperator& m, std::span<const double> x, MatvecCounter& counter) {
  return m.apply(x, counter);
}

enum class PrecondKind { none, jacobi, ic0 };
enum class RebuildPolicy { fixed, per_cycle };

struct PreconditionerSpec {
  PrecondKind kind = PrecondKind::none;
  /// Shift sigma in M ~ (A - sigma B)^{-1}.
  double shift = 0.0;
  /// Jacobi diagonal floor, relative to max_j |A_jj|.
  double diag_floor = 1e-8;
  RebuildPolicy rebuild = RebuildPolicy::fixed;
};

PrecondKind parse_precond_kind(std::string_view name);
std::string_view to_string(PrecondKind kind);

/// M = diag(d)^{-1}, d_i = max(|A_ii - sigma B_ii|, floor * max_j |A_jj|).
LinearOperator build_jacobi(const SparseSymMatrix& a, const SparseSymMatrix* b, double sigma, double diag_floor);

class Ic0Breakdown : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Zero-fill incomplete Cholesky L L^T ~ A - sigma B on the pattern of A (the
/// pattern of B outside A is ignored). On a non-positive pivot the factorization is
/// retried on A - sigma B + alpha I for alpha = 1e-8, 1e-6, ..., 1e-2 times
/// ||A||_F / sqrt(n); throws Ic0Breakdown when that also fails.
LinearOperator build_ic0(const SparseSymMatrix& a, const SparseSymMatrix* b, double sigma,
                         double* diagonal_shift_used = nullptr);

/// Builds the operator described by spec; `none` gives the identity.
LinearOperator build_preconditioner(const PreconditionerSpec& spec, const SparseSymMatrix& a,
                                    const SparseSymMatrix* b, double sigma);

}  // namespace trplk

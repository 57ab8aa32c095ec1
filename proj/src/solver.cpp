// Copyright (c) 2026 The trplk contributors
// SPDX-License-Identifier: Apache-2.0

#include "trplk/solver.hpp"

#include <stdexcept>

namespace trplk {

void SolverConfig::validate() const {
  if (nev < 1) throw std::invalid_argument("nev must be at least 1");
  if (restart_size < nev) throw std::invalid_argument("restart size must be at least nev");
  if (restart_size + plus_k >= max_basis)
    throw std::invalid_argument("max basis must exceed restart size + plus-k (no room for inner steps)");
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (max_cycles < 1) throw std::invalid_argument("max cycles must be at least 1");
}

std::string_view to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_cycles: return "max_cycles";
    case SolveStatus::breakdown: return "breakdown";
  }
  return "unknown";
}

bool convergence_check(double a_norm_f, double resid_norm, double tol) { return resid_norm <= a_norm_f * tol; }

double residual_norm(const SparseSymMatrix& a, const SparseSymMatrix* b, std::span<const double> x, double theta) {
  Vector ax(a.n()), bx(x.begin(), x.end());
  a.multiply(x, ax);
  if (b) b->multiply(x, bx);
  axpy(-theta, bx, ax);
  return norm2(ax);
}

double rayleigh_quotient(const SparseSymMatrix& a, const SparseSymMatrix* b, std::span<const double> x) {
  Vector ax(a.n());
  a.multiply(x, ax);
  double denom = dot(x, x);
  if (b) {
    Vector bx(a.n());
    b->multiply(x, bx);
    denom = dot(x, bx);
  }
  return dot(x, ax) / denom;
}

}  // namespace trplk

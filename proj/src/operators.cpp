// Copyright (c) 2026 The trplk contributors
// SPDX-License-Identifier: Apache-2.0

#include "trplk/operators.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

namespace trplk {

void LinearOperator::apply(std::span<const double> x, std::span<double> y, MatvecCounter& counter) const {
  if (x.size() != n_ || y.size() != n_) throw std::invalid_argument("LinearOperator::apply: dimension mismatch");
  fn_(x, y);
  if (kind_ == OperatorKind::matrix)
    ++counter.matvec_count;
  else
    ++counter.precond_count;
}

Vector LinearOperator::apply(std::span<const double> x, MatvecCounter& counter) const {
  Vector y(n_);
  apply(x, y, counter);
  return y;
}

LinearOperator LinearOperator::identity(std::size_t n) {
  return {n, OperatorKind::identity, [](std::span<const double> x, std::span<double> y) {
            std::copy(x.begin(), x.end(), y.begin());
          }};
}

LinearOperator LinearOperator::from_matrix(std::shared_ptr<const SparseSymMatrix> a) {
  const std::size_t n = a->n();
  return {n, OperatorKind::matrix,
          [a = std::move(a)](std::span<const double> x, std::span<double> y) { a->multiply(x, y); }};
}

PrecondKind parse_precond_kind(std::string_view name) {
  if (name == "none") return PrecondKind::none;
  if (name == "jacobi") return PrecondKind::jacobi;
  if (name == "ic0") return PrecondKind::ic0;
  throw std::invalid_argument("unknown preconditioner '" + std::string(name) + "'");
}

std::string_view to_string(PrecondKind kind) {
  switch (kind) {
    case PrecondKind::none: return "none";
    case PrecondKind::jacobi: return "jacobi";
    case PrecondKind::ic0: return "ic0";
  }
  return "unknown";
}

LinearOperator build_jacobi(const SparseSymMatrix& a, const SparseSymMatrix* b, double sigma, double diag_floor) {
  if (b && b->n() != a.n()) throw std::invalid_argument("build_jacobi: B dimension mismatch");
  if (!(diag_floor > 0.0)) throw std::invalid_argument("build_jacobi: diagonal floor must be positive");
  const Vector da = a.diagonal_values();
  double amax = 0.0;
  for (double v : da) amax = std::max(amax, std::abs(v));
  const double floor = diag_floor * (amax > 0.0 ? amax : 1.0);
  auto inv = std::make_shared<Vector>(a.n());
  for (std::size_t i = 0; i < a.n(); ++i) {
    const double shifted = da[i] - sigma * (b ? b->at(i, i) : 1.0);
    (*inv)[i] = 1.0 / std::max(std::abs(shifted), floor);
  }
  return {a.n(), OperatorKind::jacobi, [inv](std::span<const double> x, std::span<double> y) {
            for (std::size_t i = 0; i < x.size(); ++i) y[i] = (*inv)[i] * x[i];
          }};
}

namespace {

/// Lower triangle (diagonal last in each row) in CSR.
struct LowerFactor {
  std::vector<std::size_t> row_ptr;
  std::vector<std::size_t> col;
  Vector val;
};

std::optional<LowerFactor> try_ic0(const SparseSymMatrix& a, const SparseSymMatrix* b, double sigma, double alpha) {
  const std::size_t n = a.n();
  LowerFactor l;
  l.row_ptr.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = a.row_ptr()[i]; k < a.row_ptr()[i + 1]; ++k) {
      const std::size_t j = a.col_idx()[k];
      if (j >= i) break;
      l.col.push_back(j);
      l.val.push_back(a.values()[k] - (b ? sigma * b->at(i, j) : 0.0));
    }
    l.col.push_back(i);
    l.val.push_back(a.at(i, i) - sigma * (b ? b->at(i, i) : 1.0) + alpha);
    l.row_ptr[i + 1] = l.col.size();
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t begin = l.row_ptr[i];
    const std::size_t diag = l.row_ptr[i + 1] - 1;
    for (std::size_t k = begin; k < diag; ++k) {
      const std::size_t j = l.col[k];
      // s = S_ij - sum_{m < j} L_im L_jm over the shared pattern.
      double s = l.val[k];
      std::size_t pi = begin, pj = l.row_ptr[j];
      const std::size_t ej = l.row_ptr[j + 1] - 1;
      while (pi < k && pj < ej) {
        if (l.col[pi] == l.col[pj]) {
          s -= l.val[pi] * l.val[pj];
          ++pi;
          ++pj;
        } else if (l.col[pi] < l.col[pj]) {
          ++pi;
        } else {
          ++pj;
        }
      }
      l.val[k] = s / l.val[ej];
    }
    double d = l.val[diag];
    for (std::size_t k = begin; k < diag; ++k) d -= l.val[k] * l.val[k];
    if (!(d > 0.0) || !std::isfinite(d)) return std::nullopt;
    l.val[diag] = std::sqrt(d);
  }
  return l;
}

}  // namespace

LinearOperator build_ic0(const SparseSymMatrix& a, const SparseSymMatrix* b, double sigma,
                         double* diagonal_shift_used) {
  if (b && b->n() != a.n()) throw std::invalid_argument("build_ic0: B dimension mismatch");
  const double unit = frobenius_norm(a) / std::sqrt(static_cast<double>(a.n()));
  std::optional<LowerFactor> factor;
  double alpha = 0.0;
  for (double rel : {0.0, 1e-8, 1e-6, 1e-4, 1e-2}) {
    alpha = rel * unit;
    factor = try_ic0(a, b, sigma, alpha);
    if (factor) break;
  }
  if (!factor)
    throw Ic0Breakdown("build_ic0: incomplete Cholesky broke down even with diagonal shift " + std::to_string(alpha) +
                       "; use the Jacobi preconditioner instead");
  if (diagonal_shift_used) *diagonal_shift_used = alpha;

  auto l = std::make_shared<const LowerFactor>(std::move(*factor));
  const std::size_t n = a.n();
  return {n, OperatorKind::ic0, [l, n](std::span<const double> x, std::span<double> y) {
            // L z = x
            for (std::size_t i = 0; i < n; ++i) {
              double s = x[i];
              const std::size_t diag = l->row_ptr[i + 1] - 1;
              for (std::size_t k = l->row_ptr[i]; k < diag; ++k) s -= l->val[k] * y[l->col[k]];
              y[i] = s / l->val[diag];
            }
            // L^T y = z, column sweep over the rows of L.
            for (std::size_t i = n; i-- > 0;) {
              const std::size_t diag = l->row_ptr[i + 1] - 1;
              y[i] /= l->val[diag];
              for (std::size_t k = l->row_ptr[i]; k < diag; ++k) y[l->col[k]] -= l->val[k] * y[i];
            }
          }};
}

LinearOperator build_preconditioner(const PreconditionerSpec& spec, const SparseSymMatrix& a,
                                    const SparseSymMatrix* b, double sigma) {
  switch (spec.kind) {
    case PrecondKind::none: return LinearOperator::identity(a.n());
    case PrecondKind::jacobi: return build_jacobi(a, b, sigma, spec.diag_floor);
    case PrecondKind::ic0: return build_ic0(a, b, sigma);
  }
  throw std::invalid_argument("build_preconditioner: unknown kind");
}

}  // namespace trplk

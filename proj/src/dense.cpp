// Copyright (c) 2026 The trplk contributors
// SPDX-License-Identifier: Apache-2.0

#include "trplk/dense.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace trplk {

namespace {

constexpr int kMaxSweeps = 100;

void rotate(DenseMatrix& a, double s, double tau, std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
  const double g = a(i, j);
  const double h = a(k, l);
  a(i, j) = g - s * (h + g * tau);
  a(k, l) = h + s * (g - h * tau);
}

void fix_signs(DenseMatrix& v) {
  for (std::size_t j = 0; j < v.cols(); ++j) {
    std::size_t imax = 0;
    for (std::size_t i = 1; i < v.rows(); ++i)
      if (std::abs(v(i, j)) > std::abs(v(imax, j))) imax = i;
    if (v(imax, j) < 0.0) scale(-1.0, v.col(j));
  }
}

double b_norm(std::span<const double> w, std::span<const double> bw) {
  return std::sqrt(std::max(0.0, dot(w, bw.empty() ? w : bw)));
}

}  // namespace

EigenDecomposition sym_eig_small(const DenseMatrix& t) {
  if (t.rows() != t.cols()) throw std::invalid_argument("sym_eig_small: matrix not square");
  const std::size_t k = t.rows();
  DenseMatrix a = t;
  a.symmetrize();
  DenseMatrix v = DenseMatrix::identity(k);
  Vector d(k), b(k), z(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) d[i] = b[i] = a(i, i);

  bool converged = k <= 1;
  for (int sweep = 1; sweep <= kMaxSweeps && !converged; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < k; ++p)
      for (std::size_t q = p + 1; q < k; ++q) off += std::abs(a(p, q));
    if (off == 0.0) {
      converged = true;
      break;
    }
    const double threshold = sweep < 4 ? 0.2 * off / static_cast<double>(k * k) : 0.0;
    for (std::size_t p = 0; p + 1 < k; ++p)
      for (std::size_t q = p + 1; q < k; ++q) {
        const double g = 100.0 * std::abs(a(p, q));
        if (sweep > 4 && std::abs(d[p]) + g == std::abs(d[p]) && std::abs(d[q]) + g == std::abs(d[q])) {
          a(p, q) = 0.0;
          continue;
        }
        if (std::abs(a(p, q)) <= threshold) continue;
        double h = d[q] - d[p];
        double tan;
        if (std::abs(h) + g == std::abs(h)) {
          tan = a(p, q) / h;
        } else {
          const double theta = 0.5 * h / a(p, q);
          tan = 1.0 / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
          if (theta < 0.0) tan = -tan;
        }
        const double c = 1.0 / std::sqrt(1.0 + tan * tan);
        const double s = tan * c;
        const double tau = s / (1.0 + c);
        h = tan * a(p, q);
        z[p] -= h;
        z[q] += h;
        d[p] -= h;
        d[q] += h;
        a(p, q) = 0.0;
        // a is kept in its upper triangle.
        for (std::size_t j = 0; j < p; ++j) rotate(a, s, tau, j, p, j, q);
        for (std::size_t j = p + 1; j < q; ++j) rotate(a, s, tau, p, j, j, q);
        for (std::size_t j = q + 1; j < k; ++j) rotate(a, s, tau, p, j, q, j);
        for (std::size_t j = 0; j < k; ++j) rotate(v, s, tau, j, p, j, q);
      }
    for (std::size_t p = 0; p < k; ++p) {
      b[p] += z[p];
      d[p] = b[p];
      z[p] = 0.0;
    }
  }
  if (!converged) throw NumericalError("sym_eig_small: Jacobi iteration did not converge");

  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return d[x] < d[y]; });
  EigenDecomposition out{Vector(k), DenseMatrix(k, k)};
  for (std::size_t j = 0; j < k; ++j) {
    out.values[j] = d[order[j]];
    std::copy(v.col(order[j]).begin(), v.col(order[j]).end(), out.vectors.col(j).begin());
  }
  fix_signs(out.vectors);
  return out;
}

DenseMatrix cholesky(const DenseMatrix& s) {
  if (s.rows() != s.cols()) throw std::invalid_argument("cholesky: matrix not square");
  const std::size_t k = s.rows();
  DenseMatrix l(k, k);
  for (std::size_t j = 0; j < k; ++j) {
    double diag = s(j, j);
    for (std::size_t m = 0; m < j; ++m) diag -= l(j, m) * l(j, m);
    if (!(diag > 0.0)) throw NotPositiveDefinite("cholesky: non-positive pivot at column " + std::to_string(j));
    l(j, j) = std::sqrt(diag);
    for (std::size_t i = j + 1; i < k; ++i) {
      double v = 0.5 * (s(i, j) + s(j, i));
      for (std::size_t m = 0; m < j; ++m) v -= l(i, m) * l(j, m);
      l(i, j) = v / l(j, j);
    }
  }
  return l;
}

EigenDecomposition sym_eig_pencil_small(const DenseMatrix& t, const DenseMatrix& s) {
  if (t.rows() != t.cols() || s.rows() != t.rows() || s.cols() != t.cols())
    throw std::invalid_argument("sym_eig_pencil_small: shape mismatch");
  const std::size_t k = t.rows();
  const DenseMatrix l = cholesky(s);

  // C = L^{-1} T L^{-T}: forward-solve columns of T, then rows.
  DenseMatrix y = t;
  y.symmetrize();
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t i = 0; i < k; ++i) {
      double v = y(i, j);
      for (std::size_t m = 0; m < i; ++m) v -= l(i, m) * y(m, j);
      y(i, j) = v / l(i, i);
    }
  DenseMatrix c(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      double v = y(i, j);
      for (std::size_t m = 0; m < j; ++m) v -= l(j, m) * c(i, m);
      c(i, j) = v / l(j, j);
    }

  EigenDecomposition out = sym_eig_small(c);
  // w = L^{-T} y
  for (std::size_t col = 0; col < k; ++col) {
    auto w = out.vectors.col(col);
    for (std::size_t ii = k; ii-- > 0;) {
      double v = w[ii];
      for (std::size_t m = ii + 1; m < k; ++m) v -= l(m, ii) * w[m];
      w[ii] = v / l(ii, ii);
    }
  }
  fix_signs(out.vectors);
  return out;
}

OrthoStatus orthogonalize_in_place(std::span<double> w, std::span<double> bw, const Block& v, const Block* bv) {
  const bool use_b = !bw.empty();
  if (use_b && (bv == nullptr || bv->cols() != v.cols()))
    throw std::invalid_argument("orthogonalize_in_place: B-images of the basis are required");
  OrthoStatus st;
  const double norm0 = b_norm(w, bw);
  if (norm0 == 0.0 || !std::isfinite(norm0)) {
    st.breakdown = true;
    return st;
  }
  double prev = norm0;
  double now = norm0;
  bool accepted = v.cols() == 0;
  for (int pass = 1; pass <= 3 && !accepted; ++pass) {
    st.passes = pass;
    for (std::size_t j = 0; j < v.cols(); ++j) {
      const double c = dot(v.col(j), use_b ? std::span<const double>(bw) : std::span<const double>(w));
      axpy(-c, v.col(j), w);
      if (use_b) axpy(-c, bv->col(j), bw);
    }
    now = b_norm(w, bw);
    if (now < 1e-14 * norm0) break;
    if (now > prev / std::sqrt(2.0)) accepted = true;
    prev = now;
  }
  st.norm = now;
  if (!accepted || now < 1e-14 * norm0) {
    st.breakdown = true;
    return st;
  }
  scale(1.0 / now, w);
  if (use_b) scale(1.0 / now, bw);
  return st;
}

OrthoResult orthogonalize_vector(Vector w, const Block& v, const SparseSymMatrix* b, MatvecCounter& counter) {
  if (w.size() != v.rows() && v.cols() > 0) throw std::invalid_argument("orthogonalize_vector: length mismatch");
  OrthoResult out;
  if (b == nullptr) {
    const OrthoStatus st = orthogonalize_in_place(w, {}, v, nullptr);
    out.norm = st.norm;
    out.breakdown = st.breakdown;
  } else {
    Block bv(v.rows(), v.cols());
    for (std::size_t j = 0; j < v.cols(); ++j) b->multiply(v.col(j), bv.col(j));
    Vector bw(w.size());
    b->multiply(w, bw);
    counter.bmatvec_count += v.cols() + 1;
    const OrthoStatus st = orthogonalize_in_place(w, bw, v, &bv);
    out.norm = st.norm;
    out.breakdown = st.breakdown;
  }
  out.vec = std::move(w);
  return out;
}

Block b_orthonormalize_block(const Block& v, const SparseSymMatrix* b, MatvecCounter& counter) {
  Block out = Block::with_rows(v.rows());
  Block bout = Block::with_rows(v.rows());
  for (std::size_t j = 0; j < v.cols(); ++j) {
    Vector w(v.col(j).begin(), v.col(j).end());
    Vector bw;
    if (b != nullptr) {
      bw.resize(w.size());
      b->multiply(w, bw);
      ++counter.bmatvec_count;
    }
    const OrthoStatus st = orthogonalize_in_place(w, bw, out, b ? &bout : nullptr);
    if (st.breakdown) continue;
    out.append(w);
    if (b != nullptr) bout.append(bw);
  }
  if (out.empty()) throw NumericalError("b_orthonormalize_block: all columns are dependent");
  return out;
}

double orthonormality_error(const Block& v, const SparseSymMatrix* b) {
  double err = 0.0;
  Vector bv(v.rows());
  for (std::size_t j = 0; j < v.cols(); ++j) {
    if (b) b->multiply(v.col(j), bv);
    const std::span<const double> bj = b ? std::span<const double>(bv) : v.col(j);
    for (std::size_t i = 0; i < v.cols(); ++i)
      err = std::max(err, std::abs(dot(v.col(i), bj) - (i == j ? 1.0 : 0.0)));
  }
  return err;
}

}  // namespace trplk

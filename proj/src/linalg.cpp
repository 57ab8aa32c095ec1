// Copyright (c) 2026 The trplk contributors
// SPDX-License-Identifier: Apache-2.0

#include "trplk/linalg.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace trplk {

DenseMatrix DenseMatrix::identity(std::size_t k) {
  DenseMatrix m(k, k);
  for (std::size_t i = 0; i < k; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::leading(std::size_t k) const {
  DenseMatrix m(k, k);
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t i = 0; i < k; ++i) m(i, j) = (*this)(i, j);
  return m;
}

DenseMatrix DenseMatrix::transpose() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t j = 0; j < cols_; ++j)
    for (std::size_t i = 0; i < rows_; ++i) t(j, i) = (*this)(i, j);
  return t;
}

void DenseMatrix::symmetrize() {
  assert(rows_ == cols_);
  for (std::size_t j = 0; j < cols_; ++j)
    for (std::size_t i = j + 1; i < rows_; ++i) {
      const double avg = 0.5 * ((*this)(i, j) + (*this)(j, i));
      (*this)(i, j) = avg;
      (*this)(j, i) = avg;
    }
}

double DenseMatrix::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

double DenseMatrix::frobenius() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("DenseMatrix product: dimension mismatch");
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double bkj = b(k, j);
      if (bkj == 0.0) continue;
      for (std::size_t i = 0; i < a.rows(); ++i) c(i, j) += a(i, k) * bkj;
    }
  return c;
}

void Block::append(std::span<const double> v) {
  if (v.size() != rows_) throw std::invalid_argument("Block::append: length mismatch");
  data_.insert(data_.end(), v.begin(), v.end());
  ++cols_;
}

void Block::truncate(std::size_t k) {
  if (k >= cols_) return;
  cols_ = k;
  data_.resize(rows_ * k);
}

void Block::erase(std::size_t j) {
  if (j >= cols_) throw std::out_of_range("Block::erase");
  data_.erase(data_.begin() + static_cast<std::ptrdiff_t>(j * rows_),
              data_.begin() + static_cast<std::ptrdiff_t>((j + 1) * rows_));
  --cols_;
}

Block Block::slice(std::size_t first, std::size_t count) const {
  if (first + count > cols_) throw std::out_of_range("Block::slice");
  Block out(rows_, count);
  std::copy(data_.begin() + static_cast<std::ptrdiff_t>(first * rows_),
            data_.begin() + static_cast<std::ptrdiff_t>((first + count) * rows_), out.data_.begin());
  return out;
}

double dot(std::span<const double> x, std::span<const double> y) {
  assert(x.size() == y.size());
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double norm2(std::span<const double> x) {
  return std::sqrt(dot(x, x));
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void scale(double alpha, std::span<double> x) {
  for (double& v : x) v *= alpha;
}

Vector combine(const Block& u, std::span<const double> y) {
  if (y.size() > u.cols()) throw std::invalid_argument("combine: too many coefficients");
  Vector out(u.rows(), 0.0);
  for (std::size_t j = 0; j < y.size(); ++j)
    if (y[j] != 0.0) axpy(y[j], u.col(j), out);
  return out;
}

Block combine(const Block& u, const DenseMatrix& y, std::size_t out_cols) {
  if (y.rows() > u.cols() || out_cols > y.cols())
    throw std::invalid_argument("combine: coefficient shape mismatch");
  Block out(u.rows(), out_cols);
  for (std::size_t j = 0; j < out_cols; ++j) {
    auto dst = out.col(j);
    for (std::size_t k = 0; k < y.rows(); ++k)
      if (y(k, j) != 0.0) axpy(y(k, j), u.col(k), dst);
  }
  return out;
}

Vector project(const Block& u, std::span<const double> w) {
  Vector c(u.cols());
  for (std::size_t j = 0; j < u.cols(); ++j) c[j] = dot(u.col(j), w);
  return c;
}

DenseMatrix inner(const Block& u, const Block& v) {
  DenseMatrix g(u.cols(), v.cols());
  for (std::size_t j = 0; j < v.cols(); ++j)
    for (std::size_t i = 0; i < u.cols(); ++i) g(i, j) = dot(u.col(i), v.col(j));
  return g;
}

Block random_block(std::size_t n, std::size_t k, std::uint64_t seed) {
  Rng rng(seed);
  Block b(n, k);
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t i = 0; i < n; ++i) b(i, j) = rng.uniform();
  return b;
}

Vector random_vector(std::size_t n, Rng& rng) {
  Vector v(n);
  for (double& x : v) x = rng.symmetric();
  return v;
}

}  // namespace trplk

// Copyright (c) 2026 The trplk contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace trplk {

using Vector = std::vector<double>;

/// Raised when an iteration hits a numerical condition it cannot recover from.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Small dense matrix, column-major.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static DenseMatrix identity(std::size_t k);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[j * rows_ + i]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[j * rows_ + i]; }

  std::span<double> col(std::size_t j) { return {data_.data() + j * rows_, rows_}; }
  std::span<const double> col(std::size_t j) const { return {data_.data() + j * rows_, rows_}; }

  /// Leading k x k block.
  DenseMatrix leading(std::size_t k) const;
  DenseMatrix transpose() const;
  /// Overwrite with (M + M^T) / 2.
  void symmetrize();
  double max_abs() const;
  double frobenius() const;

  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b);

/// Tall n x k block of column vectors stored contiguously column by column.
class Block {
 public:
  Block() = default;
  Block(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return cols_ == 0; }

  std::span<double> col(std::size_t j) { return {data_.data() + j * rows_, rows_}; }
  std::span<const double> col(std::size_t j) const { return {data_.data() + j * rows_, rows_}; }
  double& operator()(std::size_t i, std::size_t j) { return data_[j * rows_ + i]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[j * rows_ + i]; }

  void append(std::span<const double> v);
  /// Keep only the first k columns.
  void truncate(std::size_t k);
  /// Remove column j, shifting later columns left.
  void erase(std::size_t j);
  /// Columns [first, first + count).
  Block slice(std::size_t first, std::size_t count) const;

  /// Empty block that will hold columns of length n.
  static Block with_rows(std::size_t n) {
    Block b;
    b.rows_ = n;
    return b;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double dot(std::span<const double> x, std::span<const double> y);
double norm2(std::span<const double> x);
/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void scale(double alpha, std::span<double> x);

/// U(:, 0:k) * y(0:k) where k = y.size().
Vector combine(const Block& u, std::span<const double> y);
/// U(:, 0:ncols) * Y(0:ncols, 0:out_cols).
Block combine(const Block& u, const DenseMatrix& y, std::size_t out_cols);
/// U^T w over all columns of U.
Vector project(const Block& u, std::span<const double> w);
/// U^T V.
DenseMatrix inner(const Block& u, const Block& v);

/// Seeded generator for start vectors. Draws come straight from mt19937_64 so
/// that streams agree across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform on [-1, 1).
  double symmetric() { return 2.0 * uniform() - 1.0; }

 private:
  std::mt19937_64 engine_;
};

/// n x k block of uniform [0,1) entries filled column by column; column j does
/// not depend on k.
Block random_block(std::size_t n, std::size_t k, std::uint64_t seed);
Vector random_vector(std::size_t n, Rng& rng);

}  // namespace trplk

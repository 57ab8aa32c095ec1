// Copyright (c) 2026 The trplk contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "trplk/linalg.hpp"

namespace trplk {

/// Operator application tallies for one solve. Every application of A, of a
/// preconditioner, or of B bumps exactly one field by one.
struct MatvecCounter {
  std::size_t matvec_count = 0;
  std::size_t precond_count = 0;
  std::size_t bmatvec_count = 0;

  friend bool operator==(const MatvecCounter&, const MatvecCounter&) = default;
};

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Symmetric sparse matrix in CSR form with both triangles stored.
///
/// Immutable once built. Construction checks that every stored (i, j, v) has a
/// partner (j, i, v) with the identical value, that column indices are sorted
/// and unique within each row, and that all values are finite.
class SparseSymMatrix {
 public:
  SparseSymMatrix() = default;

  /// Builds from triplets holding both triangles. Duplicate coordinates are
  /// summed; their count is returned through `duplicates` when non-null.
  static SparseSymMatrix from_triplets(std::size_t n, std::vector<Triplet> entries,
                                       std::size_t* duplicates = nullptr);

  /// Builds from explicit CSR arrays and validates them.
  static SparseSymMatrix from_csr(std::size_t n, std::vector<std::size_t> row_ptr,
                                  std::vector<std::size_t> col_idx, std::vector<double> values);

  static SparseSymMatrix identity(std::size_t n);
  static SparseSymMatrix diagonal(std::span<const double> d);

  std::size_t n() const { return n_; }
  std::size_t nnz() const { return values_.size(); }
  const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
  const std::vector<std::size_t>& col_idx() const { return col_idx_; }
  const std::vector<double>& values() const { return values_; }

  /// Stored value at (i, j), zero when not in the pattern.
  double at(std::size_t i, std::size_t j) const;
  Vector diagonal_values() const;

  /// y = A x without touching any counter.
  void multiply(std::span<const double> x, std::span<double> y) const;

 private:
  void validate() const;

  std::size_t n_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> col_idx_;
  std::vector<double> values_;
};

/// Returns A x and bumps counter.matvec_count.
Vector spmv(const SparseSymMatrix& a, std::span<const double> x, MatvecCounter& counter);
/// y = A x, bumps counter.matvec_count.
void spmv(const SparseSymMatrix& a, std::span<const double> x, std::span<double> y,
          MatvecCounter& counter);

/// sqrt of the sum of squares of all stored entries (off-diagonals counted twice).
double frobenius_norm(const SparseSymMatrix& a);

class MatrixMarketError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ParsedMatrix {
  SparseSymMatrix matrix;
  /// Number of coordinates that appeared more than once and were summed.
  std::size_t duplicate_entries = 0;
};

/// Reads a coordinate-format Matrix Market stream (real or integer field,
/// symmetric or numerically symmetric general).
ParsedMatrix parse_matrix_market(std::istream& in);
ParsedMatrix parse_matrix_market(std::string_view text);
ParsedMatrix read_matrix_market(const std::string& path);

/// Writes the lower triangle as `coordinate real symmetric` with
/// round-trip precision.
void write_matrix_market(std::ostream& out, const SparseSymMatrix& a);
void write_matrix_market(const std::string& path, const SparseSymMatrix& a);

enum class MatrixKind { laplacian1d, laplacian2d, diag_clustered, diag_uniform };

struct GeneratorParams {
  /// diag_clustered: number of leading clustered values.
  std::size_t cluster_size = 5;
  /// diag_clustered: value i of the cluster is 1 + 10^(-cluster_decay * (i + 1)).
  double cluster_decay = 1.0;
};

SparseSymMatrix generate_test_matrix(MatrixKind kind, std::size_t n, const GeneratorParams& params = {});
MatrixKind parse_matrix_kind(std::string_view name);
std::string_view to_string(MatrixKind kind);

}  // namespace trplk

// Copyright (c) 2026 The trplk contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>

#include "trplk/linalg.hpp"
#include "trplk/sparse_matrix.hpp"

namespace trplk {

/// Eigenvalues ascending, eigenvectors as matching columns.
struct EigenDecomposition {
  Vector values;
  DenseMatrix vectors;
};

class NotPositiveDefinite : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Full spectral decomposition of a small symmetric matrix by cyclic Jacobi
/// rotations. The input is symmetrized first. Each eigenvector is signed so
/// that its largest-magnitude component is positive; equal eigenvalues keep
/// the order in which the rotations produced them.
EigenDecomposition sym_eig_small(const DenseMatrix& t);

/// Lower-triangular L with S = L L^T. Throws NotPositiveDefinite on a
/// non-positive pivot.
DenseMatrix cholesky(const DenseMatrix& s);

/// Generalized pairs T w = rho S w through S = L L^T and a Jacobi solve of
/// L^{-1} T L^{-T}. Eigenvectors are S-orthonormal.
EigenDecomposition sym_eig_pencil_small(const DenseMatrix& t, const DenseMatrix& s);

/// Outcome of projecting a vector against a (B-)orthonormal block.
struct OrthoStatus {
  /// (B-)norm of the vector after projection, before normalization.
  double norm = 0.0;
  bool breakdown = false;
  int passes = 0;
};

/// Projects w against the columns of v in place and normalizes it.
///
/// `bw` is the B-image of w and `bv` the B-images of v; with B absent pass an
/// empty `bw` and a null `bv`, and the Euclidean inner product is used. Each
/// pass removes V V^T (B w); another pass follows whenever the norm fell by
/// more than 1/sqrt(2), up to three passes. Breakdown is reported when the
/// norm ends below 1e-14 of the input norm or still falling after the third
/// pass; w is then left unnormalized.
OrthoStatus orthogonalize_in_place(std::span<double> w, std::span<double> bw, const Block& v,
                                   const Block* bv);

struct OrthoResult {
  Vector vec;
  /// Norm before normalization.
  double norm = 0.0;
  bool breakdown = false;
};

/// Convenience form of orthogonalize_in_place that applies B itself
/// (counted in counter.bmatvec_count) when B is given.
OrthoResult orthogonalize_vector(Vector w, const Block& v, const SparseSymMatrix* b, MatvecCounter& counter);

/// Orthonormalizes the columns of v (B-inner product when b is non-null),
/// dropping columns that are numerically dependent on earlier ones. Throws
/// NumericalError when every column is dropped.
Block b_orthonormalize_block(const Block& v, const SparseSymMatrix* b, MatvecCounter& counter);

/// max |V^T B V - I|.
double orthonormality_error(const Block& v, const SparseSymMatrix* b);

}  // namespace trplk

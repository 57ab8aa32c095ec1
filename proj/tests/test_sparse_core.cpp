#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "trplk/sparse_matrix.hpp"
#include "trplk/trplk.hpp"

using namespace trplk;

TEST_CASE("matrix market: symmetric lower triangle is mirrored") {
  const auto parsed = parse_matrix_market(
      "%%MatrixMarket matrix coordinate real symmetric\n"
      "% comment\n"
      "2 2 3\n"
      "1 1 2.0\n2 1 -1.0\n2 2 2.0\n");
  const SparseSymMatrix& a = parsed.matrix;
  CHECK(a.n() == 2);
  CHECK(a.nnz() == 4);
  CHECK(a.at(0, 0) == 2.0);
  CHECK(a.at(0, 1) == -1.0);
  CHECK(a.at(1, 0) == -1.0);
  CHECK(a.at(1, 1) == 2.0);
  CHECK(parsed.duplicate_entries == 0);
}

TEST_CASE("matrix market: identity as general") {
  const auto parsed = parse_matrix_market(
      "%%MatrixMarket matrix coordinate real general\n3 3 3\n1 1 1\n2 2 1\n3 3 1\n");
  CHECK(parsed.matrix.n() == 3);
  CHECK(frobenius_norm(parsed.matrix) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-15));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(parsed.matrix.at(i, j) == (i == j ? 1.0 : 0.0));
}

TEST_CASE("matrix market: duplicates are summed and counted") {
  const auto parsed = parse_matrix_market(
      "%%MatrixMarket matrix coordinate real symmetric\n2 2 4\n1 1 1.5\n1 1 0.5\n2 1 -1\n2 2 3\n");
  CHECK(parsed.matrix.at(0, 0) == 2.0);
  CHECK(parsed.duplicate_entries == 1);
}

TEST_CASE("matrix market: integer field accepted") {
  const auto parsed = parse_matrix_market("%%MatrixMarket matrix coordinate integer symmetric\n2 2 2\n1 1 4\n2 2 5\n");
  CHECK(parsed.matrix.at(1, 1) == 5.0);
}

TEST_CASE("matrix market: errors") {
  SUBCASE("malformed header") {
    CHECK_THROWS_AS(parse_matrix_market("%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n"),
                    MatrixMarketError);
    CHECK_THROWS_AS(parse_matrix_market("hello\n"), MatrixMarketError);
    CHECK_THROWS_AS(parse_matrix_market(""), MatrixMarketError);
  }
  SUBCASE("index out of range") {
    CHECK_THROWS_AS(parse_matrix_market("%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n3 1 1.0\n"),
                    MatrixMarketError);
    CHECK_THROWS_AS(parse_matrix_market("%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n0 1 1.0\n"),
                    MatrixMarketError);
  }
  SUBCASE("non-symmetric general matrix") {
    CHECK_THROWS_AS(
        parse_matrix_market("%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1\n1 2 2\n2 1 3\n"),
        MatrixMarketError);
  }
  SUBCASE("non-real field") {
    CHECK_THROWS_AS(parse_matrix_market("%%MatrixMarket matrix coordinate complex symmetric\n1 1 1\n1 1 1 0\n"),
                    MatrixMarketError);
    CHECK_THROWS_AS(parse_matrix_market("%%MatrixMarket matrix coordinate pattern symmetric\n1 1 1\n1 1\n"),
                    MatrixMarketError);
  }
  SUBCASE("truncated entries") {
    CHECK_THROWS_AS(parse_matrix_market("%%MatrixMarket matrix coordinate real symmetric\n2 2 3\n1 1 1\n"),
                    MatrixMarketError);
  }
  SUBCASE("non-square") {
    CHECK_THROWS_AS(parse_matrix_market("%%MatrixMarket matrix coordinate real general\n2 3 1\n1 1 1\n"),
                    MatrixMarketError);
  }
}

TEST_CASE("matrix market: general within the symmetry tolerance is accepted") {
  const auto parsed = parse_matrix_market(
      "%%MatrixMarket matrix coordinate real general\n2 2 4\n1 1 1\n1 2 1.0\n2 1 1.00000000000000005\n2 2 1\n");
  CHECK(parsed.matrix.at(0, 1) == parsed.matrix.at(1, 0));
}

TEST_CASE("matrix market round trip is bit exact") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const SparseSymMatrix a = oracle::random_sparse(40, 0.1, 3.0, seed);
    std::stringstream ss;
    write_matrix_market(ss, a);
    const SparseSymMatrix b = parse_matrix_market(ss).matrix;
    REQUIRE(b.n() == a.n());
    CHECK(b.row_ptr() == a.row_ptr());
    CHECK(b.col_idx() == a.col_idx());
    CHECK(b.values() == a.values());
  }
}

TEST_CASE("construction rejects asymmetric or malformed storage") {
  CHECK_THROWS(SparseSymMatrix::from_triplets(2, {{0, 1, 1.0}}));
  CHECK_THROWS(SparseSymMatrix::from_triplets(2, {{0, 1, 1.0}, {1, 0, 2.0}}));
  CHECK_THROWS(SparseSymMatrix::from_triplets(2, {{0, 2, 1.0}, {2, 0, 1.0}}));
  CHECK_THROWS(SparseSymMatrix::from_triplets(1, {{0, 0, std::nan("")}}));
  CHECK_THROWS(SparseSymMatrix::from_csr(2, {0, 1, 2}, {1, 1}, {1.0, 1.0}));
  CHECK_THROWS(SparseSymMatrix::from_csr(2, {0, 2, 2}, {1, 0}, {1.0, 1.0}));
}

TEST_CASE("spmv examples") {
  MatvecCounter c;
  SUBCASE("identity") {
    const Vector y = spmv(SparseSymMatrix::identity(3), Vector{1, 2, 3}, c);
    CHECK(y == Vector{1, 2, 3});
    CHECK(c.matvec_count == 1);
  }
  SUBCASE("tridiagonal") {
    const Vector y = spmv(generate_test_matrix(MatrixKind::laplacian1d, 3), Vector{1, 1, 1}, c);
    CHECK(y == Vector{1, 0, 1});
  }
  SUBCASE("analytic eigenvector of the 1D Laplacian") {
    const std::size_t n = 1000;
    const SparseSymMatrix a = generate_test_matrix(MatrixKind::laplacian1d, n);
    Vector x(n);
    for (std::size_t j = 0; j < n; ++j) x[j] = std::sin(std::numbers::pi * static_cast<double>(j + 1) / 1001.0);
    const Vector y = spmv(a, x, c);
    const double lam = oracle::laplacian1d_eigenvalue(1, n);
    Vector ref = x;
    scale(lam, ref);
    axpy(-1.0, y, ref);
    // Relative to ||A||_2 ||x||: the entries of A x cancel down to lam ~ 1e-5,
    // so rounding alone puts the lam-relative error near 1e-11.
    CHECK(norm2(ref) / (4.0 * norm2(x)) <= 1e-12);
    CHECK(norm2(ref) / (lam * norm2(x)) <= 1e-10);
  }
  SUBCASE("dimension mismatch") { CHECK_THROWS(spmv(SparseSymMatrix::identity(3), Vector{1, 2}, c)); }
}

TEST_CASE("frobenius norm examples") {
  CHECK(frobenius_norm(SparseSymMatrix::identity(3)) == doctest::Approx(std::sqrt(3.0)));
  CHECK(frobenius_norm(generate_test_matrix(MatrixKind::laplacian1d, 2)) == doctest::Approx(std::sqrt(10.0)));
  CHECK(frobenius_norm(SparseSymMatrix::from_triplets(3, {})) == 0.0);
}

TEST_CASE("generators") {
  const SparseSymMatrix l3 = generate_test_matrix(MatrixKind::laplacian1d, 3);
  CHECK((oracle::dense(l3) - (Eigen::MatrixXd(3, 3) << 2, -1, 0, -1, 2, -1, 0, -1, 2).finished()).norm() == 0.0);

  const SparseSymMatrix d5 = generate_test_matrix(MatrixKind::diag_uniform, 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(d5.at(i, i) == static_cast<double>(i + 1));
  CHECK(d5.nnz() == 5);

  const SparseSymMatrix l100 = generate_test_matrix(MatrixKind::laplacian1d, 100);
  const double lam1 = oracle::eigenvalues(oracle::dense(l100))(0);
  CHECK(lam1 == doctest::Approx(oracle::laplacian1d_eigenvalue(1, 100)).epsilon(1e-12));
  CHECK(lam1 == doctest::Approx(9.6737e-4).epsilon(1e-4));

  const SparseSymMatrix l2 = generate_test_matrix(MatrixKind::laplacian2d, 16);
  CHECK(l2.at(5, 5) == 4.0);
  CHECK(l2.at(5, 4) == -1.0);
  CHECK(l2.at(5, 1) == -1.0);
  CHECK(l2.at(4, 3) == 0.0);  // row boundary of the 4 x 4 grid
  // 5-point stencil spectrum: sum of two 1D spectra.
  const Eigen::VectorXd ev = oracle::eigenvalues(oracle::dense(l2));
  CHECK(ev(0) == doctest::Approx(2.0 * oracle::laplacian1d_eigenvalue(1, 4)).epsilon(1e-12));

  const SparseSymMatrix dc = generate_test_matrix(MatrixKind::diag_clustered, 10);
  CHECK(dc.at(0, 0) == doctest::Approx(1.1));
  CHECK(dc.at(1, 1) == doctest::Approx(1.01));
  CHECK(dc.at(4, 4) == doctest::Approx(1.00001));
  CHECK(dc.at(5, 5) == 2.0);
  CHECK(dc.at(9, 9) == 6.0);

  CHECK_THROWS(generate_test_matrix(MatrixKind::laplacian1d, 1));
  CHECK_THROWS(generate_test_matrix(MatrixKind::laplacian2d, 15));
  CHECK(parse_matrix_kind("diag_clustered") == MatrixKind::diag_clustered);
  CHECK_THROWS(parse_matrix_kind("banana"));
}

TEST_CASE("generators are deterministic") {
  for (MatrixKind k : {MatrixKind::laplacian1d, MatrixKind::laplacian2d, MatrixKind::diag_clustered,
                       MatrixKind::diag_uniform}) {
    const SparseSymMatrix a = generate_test_matrix(k, 64), b = generate_test_matrix(k, 64);
    CHECK(a.values() == b.values());
    CHECK(a.col_idx() == b.col_idx());
  }
}

TEST_CASE("property: application is symmetric and matches a dense oracle") {
  std::vector<SparseSymMatrix> mats;
  mats.push_back(generate_test_matrix(MatrixKind::laplacian1d, 150));
  mats.push_back(generate_test_matrix(MatrixKind::laplacian2d, 196));
  mats.push_back(generate_test_matrix(MatrixKind::diag_clustered, 120));
  mats.push_back(generate_test_matrix(MatrixKind::diag_uniform, 50));
  for (std::uint64_t s = 0; s < 5; ++s) mats.push_back(oracle::random_sparse(30 + 30 * s, 0.08, 1.0, s));
  Rng rng(99);
  for (const SparseSymMatrix& a : mats) {
    const Eigen::MatrixXd d = oracle::dense(a);
    const double af = frobenius_norm(a);
    CHECK(af == doctest::Approx(d.norm()).epsilon(1e-14));
    for (int trial = 0; trial < 5; ++trial) {
      const Vector x = random_vector(a.n(), rng), y = random_vector(a.n(), rng);
      MatvecCounter c;
      const Vector ax = spmv(a, x, c), ay = spmv(a, y, c);
      CHECK(c.matvec_count == 2);
      CHECK(std::abs(dot(x, ay) - dot(y, ax)) <= 1e-12 * norm2(x) * norm2(y) * af);
      const Eigen::VectorXd ref = d * oracle::vec(x);
      for (std::size_t i = 0; i < a.n(); ++i) {
        const double scale_i = d.row(static_cast<Eigen::Index>(i)).cwiseAbs().dot(oracle::vec(x).cwiseAbs());
        CHECK(std::abs(ax[i] - ref(static_cast<Eigen::Index>(i))) <= 1e-13 * std::max(scale_i, 1e-300));
      }
    }
  }
}

TEST_CASE("property: solver counters equal the spmv calls they make") {
  // Counting wrapper: every spmv inside a solve must be tallied once.
  const SparseSymMatrix a = generate_test_matrix(MatrixKind::laplacian1d, 200);
  SolverConfig cfg;
  cfg.nev = 2;
  cfg.max_cycles = 7;
  const SolverReport r = trplk_solve(a, nullptr, cfg);
  std::size_t expected = 2;  // initial block
  const std::size_t first = cfg.max_basis - 2;
  expected += first;
  for (std::size_t c = 2; c <= r.cycles; ++c) expected += cfg.max_basis - cfg.restart_size;
  CHECK(r.counters.matvec_count == expected);
}

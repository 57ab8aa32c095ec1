// Copyright (c) 2026 The trplk contributors
// SPDX-License-Identifier: Apache-2.0

#include "trplk/sparse_matrix.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace trplk {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

bool blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

SparseSymMatrix SparseSymMatrix::from_triplets(std::size_t n, std::vector<Triplet> entries,
                                               std::size_t* duplicates) {
  for (const auto& e : entries)
    if (e.row >= n || e.col >= n) throw std::out_of_range("SparseSymMatrix: index out of range");
  std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  SparseSymMatrix m;
  m.n_ = n;
  m.row_ptr_.assign(n + 1, 0);
  std::size_t dup = 0;
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& e = entries[k];
    if (k > 0 && entries[k - 1].row == e.row && entries[k - 1].col == e.col) {
      m.values_.back() += e.value;
      ++dup;
      continue;
    }
    m.col_idx_.push_back(e.col);
    m.values_.push_back(e.value);
    ++m.row_ptr_[e.row + 1];
  }
  for (std::size_t i = 0; i < n; ++i) m.row_ptr_[i + 1] += m.row_ptr_[i];
  if (duplicates) *duplicates = dup;
  m.validate();
  return m;
}

SparseSymMatrix SparseSymMatrix::from_csr(std::size_t n, std::vector<std::size_t> row_ptr,
                                          std::vector<std::size_t> col_idx, std::vector<double> values) {
  SparseSymMatrix m;
  m.n_ = n;
  m.row_ptr_ = std::move(row_ptr);
  m.col_idx_ = std::move(col_idx);
  m.values_ = std::move(values);
  m.validate();
  return m;
}

SparseSymMatrix SparseSymMatrix::identity(std::size_t n) {
  const Vector ones(n, 1.0);
  return diagonal(ones);
}

SparseSymMatrix SparseSymMatrix::diagonal(std::span<const double> d) {
  const std::size_t n = d.size();
  std::vector<std::size_t> rp(n + 1), ci(n);
  for (std::size_t i = 0; i < n; ++i) {
    rp[i + 1] = i + 1;
    ci[i] = i;
  }
  return from_csr(n, std::move(rp), std::move(ci), Vector(d.begin(), d.end()));
}

void SparseSymMatrix::validate() const {
  if (row_ptr_.size() != n_ + 1 || row_ptr_.front() != 0 || row_ptr_.back() != col_idx_.size() ||
      col_idx_.size() != values_.size())
    throw std::invalid_argument("SparseSymMatrix: inconsistent CSR arrays");
  for (std::size_t i = 0; i < n_; ++i) {
    if (row_ptr_[i + 1] < row_ptr_[i]) throw std::invalid_argument("SparseSymMatrix: row_ptr decreasing");
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      if (col_idx_[k] >= n_) throw std::invalid_argument("SparseSymMatrix: column index out of range");
      if (k > row_ptr_[i] && col_idx_[k] <= col_idx_[k - 1])
        throw std::invalid_argument("SparseSymMatrix: column indices not strictly increasing");
      if (!std::isfinite(values_[k])) throw std::invalid_argument("SparseSymMatrix: non-finite value");
    }
  }
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      const std::size_t j = col_idx_[k];
      if (j == i) continue;
      const auto first = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[j]);
      const auto last = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[j + 1]);
      const auto it = std::lower_bound(first, last, i);
      if (it == last || *it != i || values_[static_cast<std::size_t>(it - col_idx_.begin())] != values_[k])
        throw std::invalid_argument("SparseSymMatrix: matrix is not symmetric");
    }
}

double SparseSymMatrix::at(std::size_t i, std::size_t j) const {
  const auto first = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_.at(i));
  const auto last = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_.at(i + 1));
  const auto it = std::lower_bound(first, last, j);
  return (it != last && *it == j) ? values_[static_cast<std::size_t>(it - col_idx_.begin())] : 0.0;
}

Vector SparseSymMatrix::diagonal_values() const {
  Vector d(n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i) d[i] = at(i, i);
  return d;
}

void SparseSymMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != n_ || y.size() != n_) throw std::invalid_argument("spmv: dimension mismatch");
  for (std::size_t i = 0; i < n_; ++i) {
    double s = 0.0;
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += values_[k] * x[col_idx_[k]];
    y[i] = s;
  }
}

Vector spmv(const SparseSymMatrix& a, std::span<const double> x, MatvecCounter& counter) {
  Vector y(a.n());
  spmv(a, x, y, counter);
  return y;
}

void spmv(const SparseSymMatrix& a, std::span<const double> x, std::span<double> y, MatvecCounter& counter) {
  a.multiply(x, y);
  ++counter.matvec_count;
}

double frobenius_norm(const SparseSymMatrix& a) {
  double s = 0.0;
  for (double v : a.values()) s += v * v;
  return std::sqrt(s);
}

ParsedMatrix parse_matrix_market(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) -> MatrixMarketError {
    return MatrixMarketError("Matrix Market line " + std::to_string(line_no) + ": " + what);
  };

  if (!std::getline(in, line)) throw MatrixMarketError("Matrix Market: empty input");
  ++line_no;
  std::istringstream header(line);
  std::string banner, object, format, field, symmetry;
  header >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket") throw fail("missing %%MatrixMarket banner");
  object = lower(object);
  format = lower(format);
  field = lower(field);
  symmetry = lower(symmetry);
  if (object != "matrix" || format != "coordinate") throw fail("only 'matrix coordinate' is supported");
  if (field != "real" && field != "integer")
    throw fail("unsupported field '" + field + "' (need real)");
  const bool symmetric = symmetry == "symmetric";
  if (!symmetric && symmetry != "general") throw fail("unsupported symmetry '" + symmetry + "'");

  std::size_t rows = 0, cols = 0, count = 0;
  for (;;) {
    if (!std::getline(in, line)) throw fail("missing size line");
    ++line_no;
    if (line.empty() || line[0] == '%' || blank(line)) continue;
    std::istringstream size_line(line);
    if (!(size_line >> rows >> cols >> count)) throw fail("malformed size line");
    break;
  }
  if (rows != cols) throw fail("matrix is not square");
  if (rows == 0) throw fail("empty matrix");

  std::vector<Triplet> entries;
  entries.reserve(symmetric ? 2 * count : count);
  std::size_t read = 0;
  while (read < count && std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '%' || blank(line)) continue;
    std::istringstream entry(line);
    long long i = 0, j = 0;
    double v = 0.0;
    if (!(entry >> i >> j >> v)) throw fail("malformed entry");
    if (i < 1 || j < 1 || static_cast<std::size_t>(i) > rows || static_cast<std::size_t>(j) > cols)
      throw fail("index out of range");
    if (!std::isfinite(v)) throw fail("non-finite value");
    const auto r = static_cast<std::size_t>(i - 1);
    const auto c = static_cast<std::size_t>(j - 1);
    entries.push_back({r, c, v});
    if (symmetric && r != c) entries.push_back({c, r, v});
    ++read;
  }
  std::size_t file_duplicates = 0;
  if (symmetric) {
    std::vector<std::pair<std::size_t, std::size_t>> coords;
    coords.reserve(read);
    for (const auto& e : entries)
      if (e.row >= e.col) coords.emplace_back(e.row, e.col);
    std::sort(coords.begin(), coords.end());
    for (std::size_t k = 1; k < coords.size(); ++k)
      if (coords[k] == coords[k - 1]) ++file_duplicates;
  }
  if (read < count) throw fail("expected " + std::to_string(count) + " entries, found " + std::to_string(read));

  if (!symmetric) {
    // Sum duplicates first, then require (i,j) and (j,i) to agree and store
    // their average so the result is exactly symmetric.
    std::map<std::pair<std::size_t, std::size_t>, double> summed;
    for (const auto& e : entries) summed[{e.row, e.col}] += e.value;
    entries.clear();
    for (const auto& [key, v] : summed) {
      const auto [r, c] = key;
      if (r == c) {
        entries.push_back({r, c, v});
        continue;
      }
      const auto mirror = summed.find({c, r});
      const double w = mirror == summed.end() ? 0.0 : mirror->second;
      if (std::abs(v - w) > 1e-13 * std::max(std::abs(v), std::abs(w)))
        throw MatrixMarketError("Matrix Market: general matrix is not numerically symmetric at (" +
                                std::to_string(r + 1) + "," + std::to_string(c + 1) + ")");
      entries.push_back({r, c, 0.5 * (v + w)});
    }
  }

  ParsedMatrix out;
  std::size_t merged = 0;
  out.matrix = SparseSymMatrix::from_triplets(rows, std::move(entries), &merged);
  out.duplicate_entries = symmetric ? file_duplicates : merged;
  return out;
}

ParsedMatrix parse_matrix_market(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_matrix_market(in);
}

ParsedMatrix read_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MatrixMarketError("cannot open " + path);
  return parse_matrix_market(in);
}

void write_matrix_market(std::ostream& out, const SparseSymMatrix& a) {
  std::size_t lower_count = 0;
  for (std::size_t i = 0; i < a.n(); ++i)
    for (std::size_t k = a.row_ptr()[i]; k < a.row_ptr()[i + 1]; ++k)
      if (a.col_idx()[k] <= i) ++lower_count;
  out << "%%MatrixMarket matrix coordinate real symmetric\n";
  out << a.n() << ' ' << a.n() << ' ' << lower_count << '\n';
  char buf[64];
  for (std::size_t i = 0; i < a.n(); ++i)
    for (std::size_t k = a.row_ptr()[i]; k < a.row_ptr()[i + 1]; ++k) {
      const std::size_t j = a.col_idx()[k];
      if (j > i) continue;
      std::snprintf(buf, sizeof buf, "%.17g", a.values()[k]);
      out << (i + 1) << ' ' << (j + 1) << ' ' << buf << '\n';
    }
}

void write_matrix_market(const std::string& path, const SparseSymMatrix& a) {
  std::ofstream out(path);
  if (!out) throw MatrixMarketError("cannot write " + path);
  write_matrix_market(out, a);
}

SparseSymMatrix generate_test_matrix(MatrixKind kind, std::size_t n, const GeneratorParams& params) {
  if (n < 2) throw std::invalid_argument("generate_test_matrix: n must be at least 2");
  std::vector<Triplet> t;
  switch (kind) {
    case MatrixKind::laplacian1d:
      for (std::size_t i = 0; i < n; ++i) {
        t.push_back({i, i, 2.0});
        if (i + 1 < n) {
          t.push_back({i, i + 1, -1.0});
          t.push_back({i + 1, i, -1.0});
        }
      }
      return SparseSymMatrix::from_triplets(n, std::move(t));
    case MatrixKind::laplacian2d: {
      const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
      if (side * side != n) throw std::invalid_argument("generate_test_matrix: laplacian2d needs a perfect square n");
      for (std::size_t r = 0; r < side; ++r)
        for (std::size_t c = 0; c < side; ++c) {
          const std::size_t i = r * side + c;
          t.push_back({i, i, 4.0});
          if (c + 1 < side) {
            t.push_back({i, i + 1, -1.0});
            t.push_back({i + 1, i, -1.0});
          }
          if (r + 1 < side) {
            t.push_back({i, i + side, -1.0});
            t.push_back({i + side, i, -1.0});
          }
        }
      return SparseSymMatrix::from_triplets(n, std::move(t));
    }
    case MatrixKind::diag_clustered: {
      if (params.cluster_size > n) throw std::invalid_argument("generate_test_matrix: cluster_size exceeds n");
      Vector d(n);
      for (std::size_t i = 0; i < n; ++i)
        d[i] = i < params.cluster_size
                   ? 1.0 + std::pow(10.0, -params.cluster_decay * static_cast<double>(i + 1))
                   : 2.0 + static_cast<double>(i - params.cluster_size);
      return SparseSymMatrix::diagonal(d);
    }
    case MatrixKind::diag_uniform: {
      Vector d(n);
      for (std::size_t i = 0; i < n; ++i) d[i] = static_cast<double>(i + 1);
      return SparseSymMatrix::diagonal(d);
    }
  }
  throw std::invalid_argument("generate_test_matrix: unknown kind");
}

MatrixKind parse_matrix_kind(std::string_view name) {
  if (name == "laplacian1d") return MatrixKind::laplacian1d;
  if (name == "laplacian2d") return MatrixKind::laplacian2d;
  if (name == "diag_clustered") return MatrixKind::diag_clustered;
  if (name == "diag_uniform") return MatrixKind::diag_uniform;
  throw std::invalid_argument("unknown matrix kind '" + std::string(name) + "'");
}

std::string_view to_string(MatrixKind kind) {
  switch (kind) {
    case MatrixKind::laplacian1d: return "laplacian1d";
    case MatrixKind::laplacian2d: return "laplacian2d";
    case MatrixKind::diag_clustered: return "diag_clustered";
    case MatrixKind::diag_uniform: return "diag_uniform";
  }
  return "unknown";
}

}  // namespace trplk

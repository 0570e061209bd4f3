#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "spalu/core.hpp"
#include "spalu/graph.hpp"

namespace spalu {

namespace mm_detail {

inline std::string lower(std::string s) {
  for (auto& c : s) c = char(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline bool parse_double(const char*& p, const char* end, double& out) {
  while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
  auto [q, ec] = std::from_chars(p, end, out);
  if (ec != std::errc()) return false;
  p = q;
  return true;
}

inline bool parse_long(const char*& p, const char* end, long& out) {
  while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
  auto [q, ec] = std::from_chars(p, end, out);
  if (ec != std::errc()) return false;
  p = q;
  return true;
}

inline bool only_space(const char* p, const char* end) {
  for (; p < end; ++p)
    if (!std::isspace(static_cast<unsigned char>(*p))) return false;
  return true;
}

inline std::string format(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace mm_detail

/// Coordinate-format Matrix Market reader (real, integer or complex;
/// general, symmetric, skew-symmetric or hermitian).
template <class Scalar>
SparseMatrix<Scalar> read_mm_matrix(const std::string& path) {
  using namespace mm_detail;
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  std::string line;
  long lineno = 0;
  if (!std::getline(in, line)) throw ParseError(path, 1, "empty file");
  ++lineno;
  std::istringstream head(line);
  std::string banner, object, format_, field, symmetry;
  head >> banner >> object >> format_ >> field >> symmetry;
  if (banner != "%%MatrixMarket" || lower(object) != "matrix")
    throw ParseError(path, lineno, "missing %%MatrixMarket matrix banner");
  if (lower(format_) != "coordinate") throw ParseError(path, lineno, "only coordinate format is supported");
  field = lower(field);
  symmetry = lower(symmetry);
  bool is_cplx = field == "complex";
  if (field != "real" && field != "double" && field != "integer" && !is_cplx)
    throw ParseError(path, lineno, "unsupported field '" + field + "'");
  if (is_cplx && !is_complex_v<Scalar>) throw ParseError(path, lineno, "complex file read as real matrix");
  if (symmetry != "general" && symmetry != "symmetric" && symmetry != "skew-symmetric" &&
      symmetry != "hermitian")
    throw ParseError(path, lineno, "unsupported symmetry '" + symmetry + "'");

  long rows = -1, cols = -1, nnz = -1;
  long size_line = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '%' || only_space(line.data(), line.data() + line.size())) continue;
    const char* p = line.data();
    const char* e = p + line.size();
    if (!parse_long(p, e, rows) || !parse_long(p, e, cols) || !parse_long(p, e, nnz) ||
        !only_space(p, e) || rows < 0 || cols < 0 || nnz < 0)
      throw ParseError(path, lineno, "malformed size line");
    size_line = lineno;
    break;
  }
  if (size_line == 0) throw ParseError(path, lineno, "missing size line");

  std::vector<Eigen::Triplet<Scalar, int>> trips;
  trips.reserve(size_t(symmetry == "general" ? nnz : 2 * nnz));
  long count = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '%' || only_space(line.data(), line.data() + line.size())) continue;
    if (count == nnz) throw ParseError(path, lineno, "more entries than the declared " + std::to_string(nnz));
    const char* p = line.data();
    const char* e = p + line.size();
    long i, j;
    double re = 0, im = 0;
    if (!parse_long(p, e, i) || !parse_long(p, e, j) || !parse_double(p, e, re) ||
        (is_cplx && !parse_double(p, e, im)) || !only_space(p, e))
      throw ParseError(path, lineno, "malformed entry");
    if (i < 1 || i > rows || j < 1 || j > cols) throw ParseError(path, lineno, "entry index out of range");
    Scalar v;
    if constexpr (is_complex_v<Scalar>)
      v = Scalar(re, im);
    else
      v = Scalar(re);
    trips.emplace_back(int(i - 1), int(j - 1), v);
    if (i != j) {
      if (symmetry == "symmetric") trips.emplace_back(int(j - 1), int(i - 1), v);
      if (symmetry == "skew-symmetric") trips.emplace_back(int(j - 1), int(i - 1), -v);
      if (symmetry == "hermitian") trips.emplace_back(int(j - 1), int(i - 1), conj(v));
    }
    ++count;
  }
  if (count != nnz)
    throw ParseError(path, size_line,
                     "declared " + std::to_string(nnz) + " entries but found " + std::to_string(count));
  SparseMatrix<Scalar> A(rows, cols);
  A.setFromTriplets(trips.begin(), trips.end());
  return A;
}

/// Writes all stored entries, or only the lower triangle when `symmetric`.
template <class Scalar>
void write_mm_matrix(const std::string& path, const SparseMatrix<Scalar>& A, bool symmetric = false) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "%%MatrixMarket matrix coordinate " << (is_complex_v<Scalar> ? "complex" : "real") << ' '
      << (symmetric ? (is_complex_v<Scalar> ? "hermitian" : "symmetric") : "general") << '\n';
  long nnz = 0;
  for (Index i = 0; i < A.outerSize(); ++i)
    for (typename SparseMatrix<Scalar>::InnerIterator it(A, i); it; ++it)
      if (!symmetric || it.col() <= i) ++nnz;
  out << A.rows() << ' ' << A.cols() << ' ' << nnz << '\n';
  for (Index i = 0; i < A.outerSize(); ++i)
    for (typename SparseMatrix<Scalar>::InnerIterator it(A, i); it; ++it) {
      if (symmetric && it.col() > i) continue;
      out << i + 1 << ' ' << it.col() + 1 << ' ';
      if constexpr (is_complex_v<Scalar>)
        out << mm_detail::format(it.value().real()) << ' ' << mm_detail::format(it.value().imag());
      else
        out << mm_detail::format(it.value());
      out << '\n';
    }
}

inline std::vector<Point> read_coords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  std::vector<Point> xy;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (mm_detail::only_space(line.data(), line.data() + line.size()) || line[0] == '#') continue;
    const char* p = line.data();
    const char* e = p + line.size();
    double x, y;
    if (!mm_detail::parse_double(p, e, x) || !mm_detail::parse_double(p, e, y) ||
        !mm_detail::only_space(p, e))
      throw ParseError(path, lineno, "expected 'x y'");
    xy.emplace_back(x, y);
  }
  return xy;
}

inline void write_coords(const std::string& path, const std::vector<Point>& xy) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  for (const auto& p : xy) out << mm_detail::format(p.x()) << ' ' << mm_detail::format(p.y()) << '\n';
}

inline std::vector<double> read_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  std::vector<double> v;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (mm_detail::only_space(line.data(), line.data() + line.size()) || line[0] == '%' || line[0] == '#')
      continue;
    const char* p = line.data();
    const char* e = p + line.size();
    double x;
    if (!mm_detail::parse_double(p, e, x) || !mm_detail::only_space(p, e))
      throw ParseError(path, lineno, "expected one value");
    v.push_back(x);
  }
  return v;
}

template <class Derived>
void write_values(const std::string& path, const Eigen::MatrixBase<Derived>& x) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  for (Index i = 0; i < x.size(); ++i) out << mm_detail::format(double(x(i))) << '\n';
}

}  // namespace spalu

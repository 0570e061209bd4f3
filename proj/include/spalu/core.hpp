#pragma once

#include <algorithm>
#include <complex>
#include <numeric>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "spalu/errors.hpp"

namespace spalu {

using Index = Eigen::Index;

template <class Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <class Scalar>
using SparseMatrix = Eigen::SparseMatrix<Scalar, Eigen::RowMajor, int>;

template <class Scalar>
using RealOf = typename Eigen::NumTraits<Scalar>::Real;

template <class Scalar>
inline constexpr bool is_complex_v = Eigen::NumTraits<Scalar>::IsComplex;

template <class Scalar>
Scalar conj(const Scalar& x) {
  if constexpr (is_complex_v<Scalar>)
    return std::conj(x);
  else
    return x;
}

/// Sorted set of vertex ids.
class IndexSet {
 public:
  IndexSet() = default;
  IndexSet(std::initializer_list<int> ids) : IndexSet(std::vector<int>(ids)) {}
  explicit IndexSet(std::vector<int> ids) : ids_(std::move(ids)) {
    std::sort(ids_.begin(), ids_.end());
    ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
  }

  static IndexSet range(int first, int last) {
    IndexSet s;
    s.ids_.resize(std::max(0, last - first));
    std::iota(s.ids_.begin(), s.ids_.end(), first);
    return s;
  }

  Index size() const { return Index(ids_.size()); }
  bool empty() const { return ids_.empty(); }
  int operator[](Index i) const { return ids_[size_t(i)]; }
  auto begin() const { return ids_.begin(); }
  auto end() const { return ids_.end(); }
  const std::vector<int>& ids() const { return ids_; }

  bool contains(int v) const { return std::binary_search(ids_.begin(), ids_.end(), v); }

  /// Position of `v` in the set, or -1.
  Index find(int v) const {
    auto it = std::lower_bound(ids_.begin(), ids_.end(), v);
    return it != ids_.end() && *it == v ? Index(it - ids_.begin()) : -1;
  }

  friend bool operator==(const IndexSet&, const IndexSet&) = default;

 private:
  std::vector<int> ids_;
};

inline IndexSet set_union(const IndexSet& a, const IndexSet& b) {
  std::vector<int> out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return IndexSet(std::move(out));
}

inline IndexSet set_difference(const IndexSet& a, const IndexSet& b) {
  std::vector<int> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return IndexSet(std::move(out));
}

inline IndexSet set_intersection(const IndexSet& a, const IndexSet& b) {
  std::vector<int> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return IndexSet(std::move(out));
}

/// Bijection on 0..n-1. p(i) is the source index placed at position i.
class Permutation {
 public:
  Permutation() = default;
  explicit Permutation(std::vector<int> forward) : fwd_(std::move(forward)), inv_(fwd_.size(), -1) {
    for (size_t i = 0; i < fwd_.size(); ++i) {
      int j = fwd_[i];
      if (j < 0 || size_t(j) >= fwd_.size() || inv_[size_t(j)] != -1)
        throw DimensionError("permutation is not a bijection on 0.." +
                             std::to_string(fwd_.size() - 1));
      inv_[size_t(j)] = int(i);
    }
  }

  static Permutation identity(Index n) {
    std::vector<int> f(static_cast<size_t>(n));
    std::iota(f.begin(), f.end(), 0);
    return Permutation(std::move(f));
  }

  Index size() const { return Index(fwd_.size()); }
  int operator()(Index i) const { return fwd_[size_t(i)]; }
  int inverse_at(Index j) const { return inv_[size_t(j)]; }
  Permutation inverse() const { return Permutation(inv_); }
  const std::vector<int>& forward() const { return fwd_; }

  friend bool operator==(const Permutation& a, const Permutation& b) { return a.fwd_ == b.fwd_; }

 private:
  std::vector<int> fwd_;
  std::vector<int> inv_;
};

/// Dense copy of A[rows, cols].
template <class Scalar>
Matrix<Scalar> extract_block(const SparseMatrix<Scalar>& A, const IndexSet& rows,
                             const IndexSet& cols) {
  auto check = [](const IndexSet& s, Index n, const char* what) {
    if (!s.empty() && (s[0] < 0 || s[s.size() - 1] >= n))
      throw BoundsError(std::string(what) + " index out of range");
  };
  check(rows, A.rows(), "row");
  check(cols, A.cols(), "column");
  Matrix<Scalar> B = Matrix<Scalar>::Zero(rows.size(), cols.size());
  for (Index r = 0; r < rows.size(); ++r) {
    for (typename SparseMatrix<Scalar>::InnerIterator it(A, rows[r]); it; ++it) {
      Index c = cols.find(int(it.col()));
      if (c >= 0) B(r, c) = it.value();
    }
  }
  return B;
}

/// B(i, j) = A(p(i), q(j)).
template <class Scalar>
SparseMatrix<Scalar> permute(const SparseMatrix<Scalar>& A, const Permutation& p,
                             const Permutation& q) {
  if (p.size() != A.rows() || q.size() != A.cols())
    throw DimensionError("permutation size does not match matrix dimensions");
  std::vector<Eigen::Triplet<Scalar, int>> trips;
  trips.reserve(size_t(A.nonZeros()));
  for (Index i = 0; i < A.rows(); ++i)
    for (typename SparseMatrix<Scalar>::InnerIterator it(A, p(i)); it; ++it)
      trips.emplace_back(int(i), q.inverse_at(it.col()), it.value());
  SparseMatrix<Scalar> B(A.rows(), A.cols());
  B.setFromTriplets(trips.begin(), trips.end());
  return B;
}

template <class Scalar>
struct DenseLU {
  Matrix<Scalar> L;
  Matrix<Scalar> U;
  Permutation p;
};

/// P B = L U with partial pivoting; (P B) row i is B row p(i).
template <class Scalar>
DenseLU<Scalar> dense_lu(const Matrix<Scalar>& B, int level = -1, long segment = -1) {
  if (B.rows() != B.cols()) throw DimensionError("dense_lu needs a square block");
  const Index n = B.rows();
  DenseLU<Scalar> out;
  if (n == 0) {
    out.p = Permutation::identity(0);
    return out;
  }
  Eigen::PartialPivLU<Matrix<Scalar>> lu(B);
  const Matrix<Scalar>& packed = lu.matrixLU();
  for (Index k = 0; k < n; ++k)
    if (packed(k, k) == Scalar(0))
      throw SingularBlockError("zero pivot in dense LU at column " + std::to_string(k), level,
                               segment);
  out.L = packed.template triangularView<Eigen::UnitLower>();
  out.U = packed.template triangularView<Eigen::Upper>();
  Eigen::VectorXi ids = lu.permutationP() * Eigen::VectorXi::LinSpaced(n, 0, int(n - 1));
  out.p = Permutation(std::vector<int>(ids.data(), ids.data() + n));
  return out;
}

enum class Triangle { lower, upper };

template <class Scalar>
Vector<Scalar> triangular_solve(const Matrix<Scalar>& T, const Vector<Scalar>& b, Triangle side,
                                bool unit_diag) {
  if (T.rows() != T.cols() || T.rows() != b.size())
    throw DimensionError("triangular_solve dimension mismatch");
  if (!unit_diag)
    for (Index k = 0; k < T.rows(); ++k)
      if (T(k, k) == Scalar(0))
        throw SingularBlockError("zero diagonal in triangular solve at " + std::to_string(k));
  if (side == Triangle::lower)
    return unit_diag ? Vector<Scalar>(T.template triangularView<Eigen::UnitLower>().solve(b))
                     : Vector<Scalar>(T.template triangularView<Eigen::Lower>().solve(b));
  return unit_diag ? Vector<Scalar>(T.template triangularView<Eigen::UnitUpper>().solve(b))
                   : Vector<Scalar>(T.template triangularView<Eigen::Upper>().solve(b));
}

}  // namespace spalu

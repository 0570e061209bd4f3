#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "spalu/core.hpp"
#include "spalu/graph.hpp"

namespace testing {

using spalu::Index;
using spalu::Matrix;
using spalu::SparseMatrix;
using spalu::Vector;

struct Rng {
  std::mt19937_64 gen;
  explicit Rng(std::uint64_t seed) : gen(seed) {}
  double uniform(double a = 0, double b = 1) { return std::uniform_real_distribution<double>(a, b)(gen); }
  double normal() { return std::normal_distribution<double>()(gen); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); }

  Matrix<double> gaussian(Index m, Index n) {
    Matrix<double> X(m, n);
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < m; ++i) X(i, j) = normal();
    return X;
  }

  Matrix<double> orthonormal(Index m, Index k) {
    Matrix<double> Q = gaussian(m, k).householderQr().householderQ() * Matrix<double>::Identity(m, k);
    return Q;
  }

  /// U diag(s) V^T with random orthonormal U, V.
  Matrix<double> with_singular_values(Index m, Index n, const std::vector<double>& s) {
    Index k = Index(s.size());
    Matrix<double> U = orthonormal(m, k), V = orthonormal(n, k);
    Vector<double> sv = Eigen::Map<const Vector<double>>(s.data(), k);
    return U * sv.asDiagonal() * V.transpose();
  }

  std::vector<int> subset(int n, int k) {
    std::vector<int> all(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) all[size_t(i)] = i;
    std::shuffle(all.begin(), all.end(), gen);
    all.resize(size_t(k));
    return all;
  }
};

/// Random size, numerical rank and decay profile; eps drawn from a ladder.
struct RankCase {
  Matrix<double> B;
  double eps;
};

inline RankCase structured_rank_case(Rng& rng) {
  Index m = rng.integer(4, 80), n = rng.integer(2, 60);
  Index r = std::min(m, n);
  Index k = rng.integer(0, int(r));
  std::vector<double> s(static_cast<size_t>(r));
  double decay = std::pow(10.0, -rng.uniform(0, 3) / std::max<Index>(1, k));
  for (Index i = 0; i < r; ++i) s[size_t(i)] = i < k ? std::pow(decay, double(i)) : 1e-14 * std::pow(0.5, double(i - k));
  const double eps_ladder[] = {1e-4, 1e-8, 1e-12};
  RankCase c{rng.with_singular_values(m, n, s) * std::pow(10.0, rng.uniform(-3, 3)), eps_ladder[rng.integer(0, 2)]};
  return c;
}

/// m x n with k singular values in [1e-2, 1] and the rest below 1e-3 sigma_k.
inline Matrix<double> gap_matrix(Rng& rng, Index m, Index n, Index k) {
  Index r = std::min(m, n);
  std::vector<double> s(static_cast<size_t>(r));
  for (Index i = 0; i < r; ++i) s[size_t(i)] = std::pow(10.0, -2 * rng.uniform());
  std::sort(s.begin(), s.begin() + k, std::greater<double>());
  for (Index i = k; i < r; ++i) s[size_t(i)] = s[size_t(k - 1)] * 1e-3 * std::pow(0.3, double(i - k + 1));
  return rng.with_singular_values(m, n, s);
}

/// Frobenius residual of an ID against the matrix it compresses.
template <class Scalar, class Id>
double id_error(const Matrix<Scalar>& B, const Id& id) {
  Matrix<Scalar> Bs(B.rows(), Index(id.skeleton.size())), Br(B.rows(), Index(id.redundant.size()));
  for (size_t j = 0; j < id.skeleton.size(); ++j) Bs.col(Index(j)) = B.col(id.skeleton[j]);
  for (size_t j = 0; j < id.redundant.size(); ++j) Br.col(Index(j)) = B.col(id.redundant[j]);
  if (Bs.cols() == 0) return Br.norm();
  return (Br - Bs * id.T).norm();
}

/// Numerical rank from singular values, relative to the largest.
inline Index svd_rank(const Matrix<double>& B, double tol) {
  Eigen::JacobiSVD<Matrix<double>> svd(B);
  const auto& s = svd.singularValues();
  Index k = 0;
  while (k < s.size() && s(k) > tol * s(0)) ++k;
  return k;
}

template <class Scalar>
Matrix<Scalar> dense(const SparseMatrix<Scalar>& A) {
  return Matrix<Scalar>(A);
}

/// 5-point Laplacian on an nx x ny grid with coordinates (i, j).
inline SparseMatrix<double> grid_laplacian(int nx, int ny, double shift = 0) {
  std::vector<Eigen::Triplet<double, int>> t;
  auto id = [&](int i, int j) { return j * nx + i; };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      t.emplace_back(id(i, j), id(i, j), 4.0 + shift);
      if (i > 0) t.emplace_back(id(i, j), id(i - 1, j), -1.0);
      if (i + 1 < nx) t.emplace_back(id(i, j), id(i + 1, j), -1.0);
      if (j > 0) t.emplace_back(id(i, j), id(i, j - 1), -1.0);
      if (j + 1 < ny) t.emplace_back(id(i, j), id(i, j + 1), -1.0);
    }
  SparseMatrix<double> A(nx * ny, nx * ny);
  A.setFromTriplets(t.begin(), t.end());
  return A;
}

/// Grid Laplacian pattern with random values; symmetric and diagonally
/// dominant unless `unsymmetric`.
inline SparseMatrix<double> random_grid_matrix(int nx, int ny, Rng& rng, bool unsymmetric = false) {
  SparseMatrix<double> A = grid_laplacian(nx, ny);
  Matrix<double> D = dense(A);
  for (Index i = 0; i < D.rows(); ++i)
    for (Index j = 0; j < i; ++j)
      if (D(i, j) != 0) {
        D(i, j) = -rng.uniform(0.5, 1.5);
        D(j, i) = unsymmetric ? -rng.uniform(0.5, 1.5) : D(i, j);
      }
  for (Index i = 0; i < D.rows(); ++i) D(i, i) = D.row(i).cwiseAbs().sum() + rng.uniform(0.1, 1.0);
  return D.sparseView();
}

}  // namespace testing

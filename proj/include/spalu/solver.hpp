#pragma once

#include <chrono>
#include <vector>

#include "spalu/factor.hpp"

namespace spalu {

struct SolveReport {
  double residual = 0;  // ||Ax - b|| / ||b||, or ||Ax|| when b = 0
  bool absolute = false;
  double apply_time = 0;
  int refinement_steps = 0;
};

template <class Scalar>
struct SolveResult {
  Matrix<Scalar> X;
  std::vector<SolveReport> reports;
};

/// ||Ax - b|| / ||b||. For b = 0 the absolute value ||Ax|| is returned and
/// `absolute` is set.
template <class Scalar>
double residual(const SparseMatrix<Scalar>& A, const Vector<Scalar>& x, const Vector<Scalar>& b,
                bool* absolute = nullptr) {
  if (A.cols() != x.size() || A.rows() != b.size()) throw DimensionError("residual: dimension mismatch");
  Vector<Scalar> r = A * x - b;
  double nb = double(b.norm());
  if (absolute) *absolute = nb == 0;
  return nb == 0 ? double(r.norm()) : double(r.norm()) / nb;
}

namespace solver_detail {

template <class Scalar, class Col>
Vector<Scalar> gather(const Col& x, const std::vector<int>& idx) {
  Vector<Scalar> y(Index(idx.size()));
  for (size_t i = 0; i < idx.size(); ++i) y(Index(i)) = x(idx[i]);
  return y;
}

template <class Scalar, class Col>
void scatter(Col& x, const std::vector<int>& idx, const Vector<Scalar>& y) {
  for (size_t i = 0; i < idx.size(); ++i) x(idx[i]) = y(Index(i));
}

}  // namespace solver_detail

template <class Scalar, class Col>
void apply_left(const ElementaryFactor<Scalar>& f, Col&& x) {
  using namespace solver_detail;
  if (f.kind == FactorKind::sparsify) {
    if (f.pivots.empty() || f.neighbors.empty()) return;
    Vector<Scalar> yr = gather<Scalar>(x, f.pivots), ys = gather<Scalar>(x, f.neighbors);
    yr.noalias() -= f.T.adjoint() * ys;
    scatter(x, f.pivots, yr);
    return;
  }
  const Index p = Index(f.pivots.size());
  Vector<Scalar> z(p);
  for (Index i = 0; i < p; ++i) z(i) = x(f.pivots[size_t(f.perm[size_t(i)])]);
  f.lu.template triangularView<Eigen::UnitLower>().solveInPlace(z);
  if (!f.neighbors.empty()) {
    Vector<Scalar> yn = gather<Scalar>(x, f.neighbors);
    yn.noalias() -= f.G * z;
    scatter(x, f.neighbors, yn);
  }
  z = z.cwiseQuotient(f.lu.diagonal());
  scatter(x, f.pivots, z);
}

template <class Scalar, class Col>
void apply_right(const ElementaryFactor<Scalar>& f, Col&& x) {
  using namespace solver_detail;
  if (f.kind == FactorKind::sparsify) {
    if (f.pivots.empty() || f.neighbors.empty()) return;
    Vector<Scalar> xs = gather<Scalar>(x, f.neighbors), xr = gather<Scalar>(x, f.pivots);
    xs.noalias() -= f.T * xr;
    scatter(x, f.neighbors, xs);
    return;
  }
  Vector<Scalar> xp = gather<Scalar>(x, f.pivots);
  if (!f.neighbors.empty()) {
    Vector<Scalar> xn = gather<Scalar>(x, f.neighbors);
    if (f.symmetric)
      xp.noalias() -= f.G.adjoint() * xn;
    else
      xp.noalias() -= f.H * xn;
  }
  if (f.symmetric) {
    f.lu.template triangularView<Eigen::UnitLower>().adjoint().solveInPlace(xp);
    for (size_t i = 0; i < f.pivots.size(); ++i) x(f.pivots[size_t(f.perm[i])]) = xp(Index(i));
  } else {
    f.lu.template triangularView<Eigen::UnitUpper>().solveInPlace(xp);
    scatter(x, f.pivots, xp);
  }
}

/// X <- A^{-1} X with the compressed factors, `panel` columns at a time.
/// Each column goes through the same sequence of operations whatever the
/// panel width.
template <class Scalar>
void apply_inverse(const SpaluFactorization<Scalar>& F, Matrix<Scalar>& X, Index panel = 32) {
  if (X.rows() != F.n) throw DimensionError("solve: right-hand side has " + std::to_string(X.rows()) +
                                            " rows, factorization has " + std::to_string(F.n));
  panel = std::max<Index>(1, panel);
  for (Index c0 = 0; c0 < X.cols(); c0 += panel) {
    Index c1 = std::min(X.cols(), c0 + panel);
    for (const auto& f : F.factors)
      for (Index j = c0; j < c1; ++j) apply_left(f, X.col(j));
    for (auto it = F.factors.rbegin(); it != F.factors.rend(); ++it)
      for (Index j = c0; j < c1; ++j) apply_right(*it, X.col(j));
  }
}

template <class Scalar>
SolveResult<Scalar> solve(const SpaluFactorization<Scalar>& F, const SparseMatrix<Scalar>& A, const Matrix<Scalar>& B,
                          int refine = 0, Index panel = 32) {
  if (A.rows() != F.n || A.cols() != F.n || B.rows() != F.n)
    throw DimensionError("solve: dimension mismatch");
  SolveResult<Scalar> out;
  auto t0 = std::chrono::steady_clock::now();
  out.X = B;
  apply_inverse(F, out.X, panel);
  double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (int s = 0; s < refine; ++s) {
    Matrix<Scalar> R = B - A * out.X;
    apply_inverse(F, R, panel);
    out.X += R;
  }
  out.reports.resize(size_t(B.cols()));
  for (Index j = 0; j < B.cols(); ++j) {
    auto& r = out.reports[size_t(j)];
    r.residual = residual<Scalar>(A, out.X.col(j), B.col(j), &r.absolute);
    r.apply_time = t;
    r.refinement_steps = refine;
  }
  return out;
}

}  // namespace spalu

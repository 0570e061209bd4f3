#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "spalu/core.hpp"
#include "spalu/graph.hpp"

namespace spalu {

/// B[:, redundant] ~= B[:, skeleton] * T. Positions index the input columns;
/// skeleton is kept in pivot order so that rows of T follow it.
template <class Scalar>
struct InterpolativeDecomposition {
  std::vector<int> skeleton;
  std::vector<int> redundant;
  Matrix<Scalar> T;
  Index rank = 0;
  double eps = 0;
};

namespace lowrank_detail {

template <class Scalar>
void solve_T(const Matrix<Scalar>& Bs, const Matrix<Scalar>& Br, Matrix<Scalar>& T) {
  T = Bs.householderQr().solve(Br);
}

}  // namespace lowrank_detail

/// Truncated column-pivoted Householder QR. Stops before step k when the
/// largest remaining column norm is <= eps * |R(0,0)|.
template <class Scalar>
InterpolativeDecomposition<Scalar> cpqr_id(const Matrix<Scalar>& B, double eps, bool refine = false) {
  using Real = RealOf<Scalar>;
  const Index m = B.rows(), n = B.cols();
  InterpolativeDecomposition<Scalar> id;
  id.eps = eps;
  std::vector<int> perm(static_cast<size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);

  Matrix<Scalar> R = B;
  Eigen::Matrix<Real, Eigen::Dynamic, 1> norms = R.colwise().squaredNorm().transpose();
  Vector<Scalar> work(n);
  Index k = 0;
  Real r00 = 0;
  const Index steps = std::min(m, n);
  for (Index j = 0; j < steps; ++j) {
    Index p = j;
    for (Index i = j + 1; i < n; ++i)
      if (norms(i) > norms(p)) p = i;
    Real top = std::sqrt(norms(p));
    if (j == 0) r00 = top;
    if (top == Real(0) || top <= Real(eps) * r00) break;
    if (p != j) {
      R.col(j).swap(R.col(p));
      std::swap(norms(j), norms(p));
      std::swap(perm[size_t(j)], perm[size_t(p)]);
    }
    Scalar tau;
    Real beta;
    auto tail = R.col(j).tail(m - j);
    Vector<Scalar> essential(m - j - 1);
    tail.makeHouseholder(essential, tau, beta);
    if (n - j - 1 > 0)
      R.block(j, j + 1, m - j, n - j - 1).applyHouseholderOnTheLeft(essential, tau, work.data());
    R(j, j) = beta;
    R.col(j).tail(m - j - 1).setZero();
    k = j + 1;
    if (m - j - 1 > 0 && n - j - 1 > 0)
      norms.tail(n - j - 1) = R.block(j + 1, j + 1, m - j - 1, n - j - 1).colwise().squaredNorm().transpose();
    else
      norms.tail(n - j - 1).setZero();
  }

  id.rank = k;
  id.skeleton.assign(perm.begin(), perm.begin() + k);
  id.redundant.assign(perm.begin() + k, perm.end());
  id.T = R.topLeftCorner(k, k).template triangularView<Eigen::Upper>().solve(R.block(0, k, k, n - k));

  if (refine && k > 0 && k < n) {
    Matrix<Scalar> Bs(m, k), Br(m, n - k);
    for (int swaps = 0; swaps < 2 * int(k); ++swaps) {
      Index i, jj;
      Real big = id.T.cwiseAbs().maxCoeff(&i, &jj);
      if (big <= Real(2)) break;
      std::swap(id.skeleton[size_t(i)], id.redundant[size_t(jj)]);
      for (Index c = 0; c < k; ++c) Bs.col(c) = B.col(id.skeleton[size_t(c)]);
      for (Index c = 0; c < n - k; ++c) Br.col(c) = B.col(id.redundant[size_t(c)]);
      lowrank_detail::solve_T(Bs, Br, id.T);
    }
  }
  return id;
}

enum class SamplingStrategy { none, gaussian, hybrid };

/// Row partition of the matrix handed to sampled_id: near rows are kept,
/// far rows are replaced by h Gaussian combinations.
struct SamplingPlan {
  SamplingStrategy strategy = SamplingStrategy::none;
  IndexSet near;
  IndexSet far;
  Index h = 0;
  std::uint64_t seed = 0;
};

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// All rows are sketched: h = min(rows, rank_guess + p).
inline SamplingPlan gaussian_plan(Index rows, Index rank_guess, Index oversample, std::uint64_t seed) {
  SamplingPlan plan;
  plan.seed = seed;
  plan.h = std::min(rows, rank_guess + oversample);
  if (plan.h >= rows) {
    plan.near = IndexSet::range(0, int(rows));
    plan.h = 0;
    return plan;
  }
  plan.strategy = SamplingStrategy::gaussian;
  plan.far = IndexSet::range(0, int(rows));
  return plan;
}

/// Rows closer than `radius` to some segment point are near, the others far.
/// When sketching would not shrink the far block the plan keeps every row.
inline SamplingPlan build_hybrid_plan(const std::vector<Point>& row_points, const std::vector<Point>& segment_points,
                                      double radius, Index rank_guess, Index oversample, std::uint64_t seed) {
  SamplingPlan plan;
  plan.seed = seed;
  std::vector<int> near, far;
  Point lo = Point::Constant(1e300), hi = Point::Constant(-1e300);
  for (const auto& q : segment_points) {
    lo = lo.cwiseMin(q);
    hi = hi.cwiseMax(q);
  }
  lo.array() -= radius;
  hi.array() += radius;
  const double r2 = radius * radius;
  for (size_t i = 0; i < row_points.size(); ++i) {
    const Point& x = row_points[i];
    bool is_near = false;
    if ((x.array() >= lo.array()).all() && (x.array() <= hi.array()).all())
      for (const auto& q : segment_points)
        if ((x - q).squaredNorm() <= r2) {
          is_near = true;
          break;
        }
    (is_near ? near : far).push_back(int(i));
  }
  Index h = std::min(Index(far.size()), rank_guess + oversample);
  if (far.empty() || h >= Index(far.size())) {
    plan.near = IndexSet::range(0, int(row_points.size()));
    return plan;
  }
  plan.strategy = SamplingStrategy::hybrid;
  plan.near = IndexSet(std::move(near));
  plan.far = IndexSet(std::move(far));
  plan.h = h;
  return plan;
}

/// h x |far| standard Gaussian scaled by 1/sqrt(h).
inline Matrix<double> gaussian_sketch(Index h, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix<double> G(h, cols);
  const double s = 1.0 / std::sqrt(double(h));
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < h; ++i) G(i, j) = s * normal(rng);
  return G;
}

/// [B(near, :); G * B(far, :)]
template <class Scalar>
Matrix<Scalar> apply_plan(const Matrix<Scalar>& B, const SamplingPlan& plan) {
  if (plan.strategy == SamplingStrategy::none) return B;
  if (plan.near.size() + plan.far.size() != B.rows()) throw DimensionError("sampling plan does not match rows");
  const Index nn = plan.near.size(), nf = plan.far.size();
  Matrix<Scalar> Y(nn + plan.h, B.cols());
  for (Index i = 0; i < nn; ++i) Y.row(i) = B.row(plan.near[i]);
  Matrix<Scalar> Bf(nf, B.cols());
  for (Index i = 0; i < nf; ++i) Bf.row(i) = B.row(plan.far[i]);
  Y.bottomRows(plan.h).noalias() = gaussian_sketch(plan.h, nf, plan.seed).template cast<Scalar>() * Bf;
  return Y;
}

template <class Scalar>
InterpolativeDecomposition<Scalar> sampled_id(const Matrix<Scalar>& B, const SamplingPlan& plan, double eps,
                                              bool refine = false) {
  if (plan.strategy == SamplingStrategy::none) return cpqr_id(B, eps, refine);
  return cpqr_id(apply_plan(B, plan), eps, refine);
}

/// One ID of [A_ni; A_in^*], both halves sampled with the same plan.
template <class Scalar>
InterpolativeDecomposition<Scalar> joint_unsymmetric_id(const Matrix<Scalar>& A_ni, const Matrix<Scalar>& A_in,
                                                        const SamplingPlan& plan, double eps, bool refine = false) {
  if (A_in.rows() != A_ni.cols() || A_in.cols() != A_ni.rows())
    throw DimensionError("joint ID: A_in must be " + std::to_string(A_ni.cols()) + " x " +
                         std::to_string(A_ni.rows()));
  Matrix<Scalar> top = apply_plan(A_ni, plan);
  Matrix<Scalar> bottom = apply_plan(Matrix<Scalar>(A_in.adjoint()), plan);
  Matrix<Scalar> Y(top.rows() + bottom.rows(), A_ni.cols());
  Y << top, bottom;
  return cpqr_id(Y, eps, refine);
}

}  // namespace spalu

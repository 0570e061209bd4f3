#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "spalu/lowrank.hpp"
#include "support.hpp"

using namespace spalu;
using testing::Rng;

namespace {

bool partitions(const InterpolativeDecomposition<double>& id, Index n) {
  std::vector<int> all = id.skeleton;
  all.insert(all.end(), id.redundant.begin(), id.redundant.end());
  std::sort(all.begin(), all.end());
  for (Index i = 0; i < n; ++i)
    if (all.size() != size_t(n) || all[size_t(i)] != i) return false;
  return Index(id.skeleton.size()) == id.rank && id.T.rows() == id.rank &&
         id.T.cols() == Index(id.redundant.size());
}

double bound(const Matrix<double>& B, const InterpolativeDecomposition<double>& id, double eps) {
  return 10 * (1 + id.T.norm()) * eps * B.norm();
}

}  // namespace

TEST_CASE("cpqr id edge cases") {
  auto z = cpqr_id(Matrix<double>(Matrix<double>::Zero(5, 4)), 1e-10);
  CHECK(z.rank == 0);
  CHECK(z.skeleton.empty());
  CHECK(partitions(z, 4));

  Rng rng(1);
  Matrix<double> Q = rng.orthonormal(8, 5);
  auto o = cpqr_id(Q, 0.5);
  CHECK(o.rank == 5);
  CHECK(o.T.cols() == 0);

  Vector<double> u = rng.gaussian(30, 1), v = rng.gaussian(12, 1);
  Matrix<double> B = u * v.transpose();
  auto r1 = cpqr_id(B, 1e-10);
  CHECK(r1.rank == 1);
  CHECK(testing::id_error(B, r1) < 1e-10 * B.norm());

  auto empty = cpqr_id(Matrix<double>(3, 0), 1e-10);
  CHECK(empty.rank == 0);
}

TEST_CASE("property: reconstruction and interpolation bounds") {
  Rng rng(101);
  for (int trial = 0; trial < 300; ++trial) {
    auto c = testing::structured_rank_case(rng);
    for (bool refine : {false, true}) {
      auto id = cpqr_id(c.B, c.eps, refine);
      const double n = double(c.B.cols()), k = double(id.rank);
      CHECK(partitions(id, c.B.cols()));
      CHECK(testing::id_error(c.B, id) <= bound(c.B, id, c.eps));
      CHECK(id.T.norm() <= 10 * std::sqrt(n * k * (n - k)) + 1e-12);
      if (refine && id.T.size() > 0) CHECK(id.T.cwiseAbs().maxCoeff() <= 2 + 1e-12);
    }
  }
}

TEST_CASE("complex ids") {
  using C = std::complex<double>;
  Rng rng(4);
  Matrix<C> U = rng.gaussian(20, 3).cast<C>() + C(0, 1) * rng.gaussian(20, 3).cast<C>();
  Matrix<C> V = rng.gaussian(3, 15).cast<C>() + C(0, 1) * rng.gaussian(3, 15).cast<C>();
  Matrix<C> B = U * V;
  auto id = cpqr_id(B, 1e-12);
  CHECK(id.rank == 3);
  CHECK(testing::id_error(B, id) <= 1e-10 * B.norm());
}

TEST_CASE("hybrid plan by distance") {
  // segment on the row y = 5 of a grid, candidate rows on four lines
  std::vector<Point> seg, rows;
  for (int x = 0; x < 10; ++x) seg.emplace_back(x, 5);
  for (int y : {1, 4, 6, 9})
    for (int x = 0; x < 10; ++x) rows.emplace_back(x, y);
  auto plan = build_hybrid_plan(rows, seg, 2.0, 10, 5, 42);
  std::vector<int> near, far;
  for (size_t i = 0; i < rows.size(); ++i) {
    double d = 1e300;
    for (const auto& q : seg) d = std::min(d, (rows[i] - q).norm());
    (d <= 2.0 ? near : far).push_back(int(i));
  }
  CHECK(plan.strategy == SamplingStrategy::hybrid);
  CHECK(plan.near == IndexSet(near));
  CHECK(plan.far == IndexSet(far));
  CHECK(plan.h == 15);

  auto all_near = build_hybrid_plan(rows, seg, 100.0, 10, 5, 42);
  CHECK(all_near.strategy == SamplingStrategy::none);
  CHECK(all_near.far.empty());
  CHECK(all_near.near.size() == Index(rows.size()));

  // far block too small to shrink
  auto tiny = build_hybrid_plan(rows, seg, 2.0, 30, 5, 42);
  CHECK(tiny.strategy == SamplingStrategy::none);

  CHECK(gaussian_sketch(6, 20, 9) == gaussian_sketch(6, 20, 9));
  CHECK(gaussian_sketch(6, 20, 9) != gaussian_sketch(6, 20, 10));
  Matrix<double> G = gaussian_sketch(400, 3, 1);
  CHECK(G.colwise().squaredNorm().mean() == doctest::Approx(1.0).epsilon(0.2));
}

TEST_CASE("sampled id") {
  Rng rng(7);
  Matrix<double> B = rng.gaussian(40, 25);
  SamplingPlan none;
  auto a = sampled_id(B, none, 1e-10), b = cpqr_id(B, 1e-10);
  CHECK(a.skeleton == b.skeleton);
  CHECK(a.T == b.T);

  SamplingPlan p = gaussian_plan(100, 40, 5, 3);
  Matrix<double> C = testing::gap_matrix(rng, 100, 30, 6);
  CHECK(sampled_id(C, p, 1e-6).skeleton == sampled_id(C, p, 1e-6).skeleton);
  CHECK_THROWS_AS(sampled_id(Matrix<double>(rng.gaussian(99, 30)), p, 1e-6), DimensionError);
}

TEST_CASE("rank-3 block with a large far set") {
  Rng rng(11);
  int pass = 0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    Matrix<double> B = rng.gaussian(200, 3) * rng.gaussian(3, 40);
    SamplingPlan plan;
    plan.strategy = SamplingStrategy::hybrid;
    plan.near = IndexSet::range(0, 20);
    plan.far = IndexSet::range(20, 200);
    plan.h = 8;
    plan.seed = std::uint64_t(t);
    auto id = sampled_id(B, plan, 1e-10);
    pass += id.rank == 3 && testing::id_error(B, id) < 10 * 1e-10 * B.norm();
  }
  CHECK(pass >= 999);
}

TEST_CASE("geometric decay matches dense rank") {
  Rng rng(12);
  std::vector<double> s(60);
  for (int j = 0; j < 60; ++j) s[size_t(j)] = std::pow(2.0, -j);
  for (int t = 0; t < 20; ++t) {
    Matrix<double> B = rng.with_singular_values(100, 60, s);
    auto dense = cpqr_id(B, 1e-8);
    auto sampled = sampled_id(B, gaussian_plan(100, 40, 5, std::uint64_t(t)), 1e-8);
    CHECK(testing::svd_rank(B, 1e-8) == 27);
    // truncation is relative to |R00| < sigma_1, so CPQR keeps one or two more
    CHECK(dense.rank >= 26);
    CHECK(dense.rank <= 29);
    CHECK(std::abs(sampled.rank - dense.rank) <= 2);
  }
}

TEST_CASE("property: gaussian sampling preserves rank across a gap") {
  Rng rng(13);
  for (int t = 0; t < 100; ++t) {
    Index k = rng.integer(1, 15);
    Matrix<double> B = testing::gap_matrix(rng, rng.integer(60, 150), rng.integer(int(k) + 5, 50), k);
    Eigen::JacobiSVD<Matrix<double>> svd(B);
    const auto& s = svd.singularValues();
    double eps = std::sqrt(s(k - 1) * s(k)) / s(0);
    auto dense = cpqr_id(B, eps);
    auto plan = gaussian_plan(B.rows(), k, 5, std::uint64_t(t));
    auto sampled = sampled_id(B, plan, eps);
    CHECK(dense.rank == k);
    CHECK(std::abs(sampled.rank - dense.rank) <= 2);
  }
}

TEST_CASE("joint unsymmetric id") {
  Rng rng(14);
  Matrix<double> Ani = rng.gaussian(50, 3) * rng.gaussian(3, 20);
  SamplingPlan none;
  auto sym = joint_unsymmetric_id(Ani, Matrix<double>(Ani.transpose()), none, 1e-10);
  CHECK(sym.skeleton == sampled_id(Ani, none, 1e-10).skeleton);
  auto zero = joint_unsymmetric_id(Ani, Matrix<double>(Matrix<double>::Zero(20, 50)), none, 1e-10);
  CHECK(zero.skeleton == sampled_id(Ani, none, 1e-10).skeleton);

  Matrix<double> X = rng.gaussian(50, 2) * rng.gaussian(2, 20);
  Matrix<double> Y = rng.gaussian(20, 2) * rng.gaussian(2, 50);
  auto joint = joint_unsymmetric_id(X, Y, none, 1e-10);
  Matrix<double> stack(100, 20);
  stack << X, Y.transpose();
  CHECK(joint.rank == testing::svd_rank(stack, 1e-10));
  CHECK(joint.rank == 4);
  CHECK(testing::id_error(stack, joint) <= bound(stack, joint, 1e-10));
  CHECK_THROWS_AS(joint_unsymmetric_id(X, Matrix<double>(rng.gaussian(21, 50)), none, 1e-10), DimensionError);

  auto plan = gaussian_plan(50, 20, 5, 1);
  CHECK(joint_unsymmetric_id(X, Y, plan, 1e-10).rank == 4);
}

TEST_CASE("complex joint id uses the adjoint") {
  using C = std::complex<double>;
  Rng rng(15);
  Matrix<C> A = rng.gaussian(30, 2).cast<C>() * (rng.gaussian(2, 12).cast<C>() + C(0, 1) * rng.gaussian(2, 12).cast<C>());
  SamplingPlan none;
  Matrix<C> Aadj = A.adjoint();
  auto id = joint_unsymmetric_id(A, Aadj, none, 1e-12);
  CHECK(id.rank == 2);
}

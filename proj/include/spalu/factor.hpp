#pragma once

#include <chrono>
#include <cstdint>
#include <exception>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "spalu/core.hpp"
#include "spalu/dissection.hpp"
#include "spalu/graph.hpp"
#include "spalu/lowrank.hpp"

namespace spalu {

enum class FactorKind { interior_lu, sparsify, eliminate };

/// One left/right pair of block-local transforms.
///
/// eliminate / interior_lu: P A_pp = L D R (symmetric mode: A_pp = P^T L D L^* P).
/// The left transform maps y_p <- L^{-1} P y_p, y_n <- y_n - G y_p, then
/// y_p <- D^{-1} y_p; the right one maps x_p <- Q^T R^{-1} (x_p - H x_n).
///
/// sparsify: pivots are the redundant dofs r, neighbors the skeleton s.
/// Left: y_r <- y_r - T^* y_s. Right: x_s <- x_s - T x_r.
template <class Scalar>
struct ElementaryFactor {
  FactorKind kind = FactorKind::eliminate;
  int level = 0;
  int segment = -1;  // segment id, -1 for leaves
  int leaf = -1;     // tree node for interior blocks
  bool symmetric = false;
  std::vector<int> pivots;
  std::vector<int> neighbors;
  Matrix<Scalar> lu;      // strict lower L, diagonal d, strict upper R
  std::vector<int> perm;  // (P y)_i = y_perm[i]
  Matrix<Scalar> G;       // |neighbors| x |pivots|
  Matrix<Scalar> H;       // |pivots| x |neighbors|; empty when symmetric
  Matrix<Scalar> T;       // sparsify: |neighbors| x |pivots|

  IndexSet scope() const {
    std::vector<int> s = pivots;
    s.insert(s.end(), neighbors.begin(), neighbors.end());
    return IndexSet(std::move(s));
  }

  long stored_entries() const {
    Index p = lu.rows();
    long tri = symmetric ? long(p * (p + 1) / 2) : long(p * p);
    return tri + long(G.size() + H.size() + T.size());
  }
};

/// Triangular factor, permutation and coupling block of one side of a pair.
template <class Scalar>
struct TransformPayload {
  Matrix<Scalar> triangle;
  std::vector<int> perm;
  Matrix<Scalar> coupling;
};

template <class Scalar>
TransformPayload<Scalar> left_payload(const ElementaryFactor<Scalar>& f) {
  TransformPayload<Scalar> t;
  if (f.kind == FactorKind::sparsify) {
    t.coupling = f.T.adjoint();
    return t;
  }
  t.triangle = f.lu.template triangularView<Eigen::UnitLower>();
  t.perm = f.perm;
  t.coupling = f.G;
  return t;
}

template <class Scalar>
TransformPayload<Scalar> right_payload(const ElementaryFactor<Scalar>& f) {
  TransformPayload<Scalar> t;
  if (f.kind == FactorKind::sparsify) {
    t.coupling = f.T;
    return t;
  }
  const Index p = f.lu.rows();
  if (f.symmetric) {
    t.triangle = Matrix<Scalar>(f.lu.template triangularView<Eigen::UnitLower>()).adjoint();
    t.perm = f.perm;
    t.coupling = f.G.adjoint();
  } else {
    t.triangle = f.lu.template triangularView<Eigen::UnitUpper>();
    t.perm.resize(size_t(p));
    std::iota(t.perm.begin(), t.perm.end(), 0);
    t.coupling = f.H;
  }
  return t;
}

/// Right payload equals the adjoint of the left payload, entry for entry.
template <class Scalar>
bool is_adjoint_pair(const ElementaryFactor<Scalar>& f) {
  auto l = left_payload(f), r = right_payload(f);
  Matrix<Scalar> lt = l.triangle.adjoint(), lc = l.coupling.adjoint();
  return r.perm == l.perm && r.triangle.rows() == lt.rows() && r.triangle.cols() == lt.cols() &&
         r.triangle == lt && r.coupling.rows() == lc.rows() && r.coupling.cols() == lc.cols() && r.coupling == lc;
}

struct LevelStats {
  int level = 0;
  int num_segments = 0;
  Index e_before = 0;  // largest segment before sparsification
  Index e_after = 0;
  double time_sparsify = 0;
  double time_eliminate = 0;
};

struct FactorStats {
  std::vector<LevelStats> levels;
  double qtilde = 1;
  long factor_nnz = 0;
  double time_interior = 0;
  long audited_factors = 0;
  long audit_violations = 0;
};

std::string stats_json(const FactorStats& s);

enum class SymmetryMode { automatic, symmetric, general };

struct FactorOptions {
  double eps = 1e-10;
  SamplingStrategy sampling = SamplingStrategy::hybrid;
  Index oversample = 5;
  double near_radius = 2;  // in median edge lengths
  std::uint64_t seed = 0;
  Index min_sparsify_size = 24;
  SymmetryMode symmetry = SymmetryMode::automatic;
  bool refine_id = false;
  int threads = 1;
  bool audit = false;
};

template <class Scalar>
struct SpaluFactorization {
  Index n = 0;
  std::vector<ElementaryFactor<Scalar>> factors;
  Permutation order;
  FactorStats stats;
  double eps = 0;
  bool symmetric = false;
};

template <class Scalar>
bool is_hermitian(const SparseMatrix<Scalar>& A) {
  if (A.rows() != A.cols()) return false;
  SparseMatrix<Scalar> At = A.adjoint();
  At.prune(Scalar(0), 0);
  SparseMatrix<Scalar> B = A;
  B.prune(Scalar(0), 0);
  if (At.nonZeros() != B.nonZeros()) return false;
  for (Index i = 0; i < B.outerSize(); ++i) {
    typename SparseMatrix<Scalar>::InnerIterator a(B, i), b(At, i);
    for (; a && b; ++a, ++b)
      if (a.col() != b.col() || a.value() != b.value()) return false;
    if (a || b) return false;
  }
  return true;
}

template <class Scalar>
void make_hermitian(Matrix<Scalar>& X) {
  for (Index j = 0; j < X.cols(); ++j) {
    X(j, j) = Scalar(std::real(X(j, j)));
    for (Index i = j + 1; i < X.rows(); ++i) X(j, i) = conj(X(i, j));
  }
}

/// Active Schur complement stored as dense blocks between clusters.
template <class Scalar>
class SchurState {
 public:
  struct Cluster {
    std::vector<int> dofs;
    std::map<int, Matrix<Scalar>> blocks;  // row blocks keyed by column cluster
    bool active = false;
  };

  std::vector<Cluster> clusters;
  std::vector<int> cluster_of;  // -1 once eliminated
  std::vector<int> position_of;

  explicit SchurState(Index n = 0) : cluster_of(size_t(n), -1), position_of(size_t(n), -1) {}

  void resize_clusters(size_t m) { clusters.resize(m); }

  void assign(int c, std::vector<int> dofs) {
    auto& cl = clusters[size_t(c)];
    cl.dofs = std::move(dofs);
    cl.active = true;
    for (size_t i = 0; i < cl.dofs.size(); ++i) {
      cluster_of[size_t(cl.dofs[i])] = c;
      position_of[size_t(cl.dofs[i])] = int(i);
    }
  }

  Index size(int c) const { return Index(clusters[size_t(c)].dofs.size()); }

  Matrix<Scalar>* find(int a, int b) {
    auto& m = clusters[size_t(a)].blocks;
    auto it = m.find(b);
    return it == m.end() ? nullptr : &it->second;
  }

  /// Existing block or a new zero block; the transposed position is created too.
  Matrix<Scalar>& block(int a, int b) {
    auto& m = clusters[size_t(a)].blocks;
    auto it = m.find(b);
    if (it != m.end()) return it->second;
    if (a != b) clusters[size_t(b)].blocks.emplace(a, Matrix<Scalar>::Zero(size(b), size(a)));
    return m.emplace(b, Matrix<Scalar>::Zero(size(a), size(b))).first->second;
  }

  std::vector<int> neighbors(int c) const {
    std::vector<int> out;
    for (const auto& [d, blk] : clusters[size_t(c)].blocks)
      if (d != c) out.push_back(d);
    return out;
  }

  void remove(int c) {
    auto& cl = clusters[size_t(c)];
    for (const auto& [d, blk] : cl.blocks)
      if (d != c) clusters[size_t(d)].blocks.erase(c);
    for (int v : cl.dofs)
      if (cluster_of[size_t(v)] == c) cluster_of[size_t(v)] = -1;
    cl = Cluster{};
  }

  std::vector<int> active_dofs() const {
    std::vector<int> out;
    for (size_t v = 0; v < cluster_of.size(); ++v)
      if (cluster_of[v] >= 0) out.push_back(int(v));
    return out;
  }

  /// Dense restriction of the active matrix to `dofs`.
  Matrix<Scalar> dense(const std::vector<int>& dofs) const {
    Matrix<Scalar> X = Matrix<Scalar>::Zero(Index(dofs.size()), Index(dofs.size()));
    for (size_t i = 0; i < dofs.size(); ++i)
      for (size_t j = 0; j < dofs.size(); ++j) {
        int a = cluster_of[size_t(dofs[i])], b = cluster_of[size_t(dofs[j])];
        if (a < 0 || b < 0) continue;
        const auto& m = clusters[size_t(a)].blocks;
        auto it = m.find(b);
        if (it != m.end())
          X(Index(i), Index(j)) = it->second(position_of[size_t(dofs[i])], position_of[size_t(dofs[j])]);
      }
    return X;
  }

  long stored_entries() const {
    long s = 0;
    for (const auto& cl : clusters)
      for (const auto& [d, blk] : cl.blocks) s += long(blk.size());
    return s;
  }
};

namespace factor_detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <class Scalar>
Matrix<Scalar> take(const Matrix<Scalar>& X, const std::vector<int>& rows, const std::vector<int>& cols) {
  Matrix<Scalar> Y(Index(rows.size()), Index(cols.size()));
  for (size_t j = 0; j < cols.size(); ++j)
    for (size_t i = 0; i < rows.size(); ++i) Y(Index(i), Index(j)) = X(rows[i], cols[j]);
  return Y;
}

template <class Scalar>
SingularBlockError singular(const ElementaryFactor<Scalar>& f) {
  if (f.leaf >= 0) return SingularBlockError("singular interior block of leaf " + std::to_string(f.leaf), f.level, f.leaf);
  return SingularBlockError("singular pivot block", f.level, f.segment);
}

/// Factors the pivot block and returns the Schur update G D H. In symmetric
/// mode only the lower triangle of App and the block Anp are read.
template <class Scalar>
Matrix<Scalar> factor_pivot_block(const Matrix<Scalar>& App, const Matrix<Scalar>& Anp, const Matrix<Scalar>& Apn,
                                  ElementaryFactor<Scalar>& f) {
  using Real = RealOf<Scalar>;
  const Index p = App.rows();
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> P;
  Matrix<Scalar> W;
  Matrix<Scalar> update;
  if (f.symmetric) {
    Eigen::LDLT<Matrix<Scalar>, Eigen::Lower> ldlt(App);
    Eigen::Matrix<Real, Eigen::Dynamic, 1> d = ldlt.vectorD().real();
    for (Index i = 0; i < p; ++i)
      if (d(i) == Real(0) || !std::isfinite(double(d(i))))
        throw singular(f);
    f.lu = ldlt.matrixLDLT();
    f.lu.template triangularView<Eigen::StrictlyUpper>().setZero();
    f.lu.diagonal() = d.template cast<Scalar>();
    P = ldlt.transpositionsP();
    W = P * Matrix<Scalar>(Anp.adjoint());
    f.lu.template triangularView<Eigen::UnitLower>().solveInPlace(W);
    Matrix<Scalar> M = d.cwiseInverse().template cast<Scalar>().asDiagonal() * W;
    f.G = M.adjoint();
    update.noalias() = W.adjoint() * M;
    make_hermitian(update);
  } else {
    Eigen::PartialPivLU<Matrix<Scalar>> lu(App);
    f.lu = lu.matrixLU();
    for (Index i = 0; i < p; ++i)
      if (f.lu(i, i) == Scalar(0) || !std::isfinite(std::abs(f.lu(i, i))))
        throw singular(f);
    P = lu.permutationP();
    W = P * Apn;
    f.lu.template triangularView<Eigen::UnitLower>().solveInPlace(W);
    f.G = f.lu.template triangularView<Eigen::Upper>().template solve<Eigen::OnTheRight>(Anp);
    update.noalias() = f.G * W;
    Vector<Scalar> dinv = f.lu.diagonal().cwiseInverse();
    f.H = dinv.asDiagonal() * W;
    for (Index i = 0; i < p; ++i) f.lu.row(i).tail(p - i - 1) *= dinv(i);
  }
  Eigen::VectorXi idx = P * Eigen::VectorXi::LinSpaced(p, 0, int(p) - 1);
  f.perm.assign(idx.data(), idx.data() + p);
  return update;
}

}  // namespace factor_detail

/// Runs the level loop over a dissection tree. Works in the original numbering.
template <class Scalar>
class Factorizer {
 public:
  Factorizer(const SparseMatrix<Scalar>& A, const Graph& g, const DissectionTree& tree, const FactorOptions& opts)
      : A_(A), g_(g), tree_(tree), opts_(opts), state_(A.rows()) {
    if (A.rows() != A.cols()) throw DimensionError("matrix must be square");
    if (Index(g.size()) != A.rows()) throw DimensionError("graph and matrix sizes differ");
    if (tree.order.size() != A.rows()) throw DimensionError("dissection and matrix sizes differ");
    out_.n = A.rows();
    out_.order = tree.order;
    out_.eps = opts.eps;
    out_.symmetric = opts.symmetry == SymmetryMode::symmetric ||
                     (opts.symmetry == SymmetryMode::automatic && is_hermitian(A));
    leaf_base_ = int(tree.segments.all.size());
    state_.resize_clusters(size_t(leaf_base_) + tree.nodes.size());
    radius_ = opts.near_radius * g.median_edge_length();
  }

  SpaluFactorization<Scalar> run() {
    load();
    auto t0 = std::chrono::steady_clock::now();
    eliminate_interiors();
    out_.stats.time_interior = factor_detail::seconds_since(t0);
    for (int l = tree_.levels; l >= 1; --l) {
      LevelStats ls;
      ls.level = l;
      auto ts = std::chrono::steady_clock::now();
      for (int id : tree_.level_segments(l)) {
        if (!state_.clusters[size_t(id)].active) continue;
        ++ls.num_segments;
        ls.e_before = std::max(ls.e_before, state_.size(id));
      }
      for (int id : tree_.level_segments(l)) {
        if (!state_.clusters[size_t(id)].active) continue;
        if (tree_.segments.all[size_t(id)].kind == SegmentKind::regular) sparsify(id, l);
      }
      for (int id : tree_.level_segments(l))
        if (state_.clusters[size_t(id)].active) ls.e_after = std::max(ls.e_after, state_.size(id));
      ls.time_sparsify = factor_detail::seconds_since(ts);
      auto te = std::chrono::steady_clock::now();
      for (int id : tree_.level_segments(l))
        if (state_.clusters[size_t(id)].active && tree_.segments.all[size_t(id)].owner_level == l)
          eliminate(id, l, id, -1);
      if (l > 1) merge(l);
      ls.time_eliminate = factor_detail::seconds_since(te);
      out_.stats.levels.push_back(ls);
    }
    double q = 0;
    for (const auto& ls : out_.stats.levels)
      if (ls.e_before > opts_.min_sparsify_size) q = std::max(q, double(ls.e_after) / double(ls.e_before));
    out_.stats.qtilde = q > 0 ? q : 1;
    for (const auto& f : out_.factors) out_.stats.factor_nnz += f.stored_entries();
    return std::move(out_);
  }

  SchurState<Scalar>& state() { return state_; }
  std::vector<ElementaryFactor<Scalar>>& factors() { return out_.factors; }

  /// Scatter A into blocks over the finest segment list and the leaves.
  void load() {
    int L = tree_.levels;
    if (L > 0)
      for (int id : tree_.level_segments(L)) state_.assign(id, tree_.segments.all[size_t(id)].vertices.ids());
    for (int leaf : tree_.leaves) state_.assign(leaf_base_ + leaf, tree_.nodes[size_t(leaf)].vertices.ids());
    for (size_t v = 0; v < state_.cluster_of.size(); ++v)
      if (state_.cluster_of[v] < 0) throw Error("dissection does not cover vertex " + std::to_string(v));
    for (Index i = 0; i < A_.outerSize(); ++i) {
      int a = state_.cluster_of[size_t(i)], pi = state_.position_of[size_t(i)];
      for (typename SparseMatrix<Scalar>::InnerIterator it(A_, i); it; ++it) {
        Index j = it.col();
        int b = state_.cluster_of[size_t(j)], pj = state_.position_of[size_t(j)];
        if (out_.symmetric) {
          if (j > i) continue;
          state_.block(a, b)(pi, pj) = it.value();
          state_.block(b, a)(pj, pi) = i == j ? Scalar(std::real(it.value())) : conj(it.value());
        } else {
          state_.block(a, b)(pi, pj) = it.value();
        }
      }
    }
  }

  void eliminate_interiors() {
    const auto& leaves = tree_.leaves;
    int threads = std::max(1, opts_.threads);
    if (threads == 1 || opts_.audit) {
      for (int leaf : leaves) eliminate(leaf_base_ + leaf, tree_.levels + 1, -1, leaf);
      return;
    }
    // Leaves never touch each other: factor a chunk concurrently, then apply
    // the updates in leaf order.
    const size_t chunk = 64 * size_t(threads);
    for (size_t start = 0; start < leaves.size(); start += chunk) {
      size_t stop = std::min(leaves.size(), start + chunk);
      std::vector<Pending> pend(stop - start);
      std::vector<std::exception_ptr> errs(static_cast<size_t>(threads));
      std::vector<std::thread> pool;
      for (int t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
          try {
            for (size_t i = start + size_t(t); i < stop; i += size_t(threads))
              pend[i - start] = prepare(leaf_base_ + leaves[i], tree_.levels + 1, -1, leaves[i]);
          } catch (...) {
            errs[size_t(t)] = std::current_exception();
          }
        });
      for (auto& th : pool) th.join();
      for (auto& e : errs)
        if (e) std::rethrow_exception(e);
      for (auto& p : pend) commit(p);
    }
  }

  /// Compress cluster c against its current neighbors, then eliminate the
  /// redundant part against the skeleton.
  void sparsify(int c, int level) {
    using namespace factor_detail;
    const Index n = state_.size(c);
    if (n <= opts_.min_sparsify_size) return;
    Audit audit(*this, c);
    auto nbs = state_.neighbors(c);
    std::vector<int> rows;
    for (int d : nbs) rows.insert(rows.end(), state_.clusters[size_t(d)].dofs.begin(), state_.clusters[size_t(d)].dofs.end());
    const Index m = Index(rows.size());
    const auto& dofs = state_.clusters[size_t(c)].dofs;

    InterpolativeDecomposition<Scalar> id;
    if (m == 0) {
      id.redundant.resize(size_t(n));
      std::iota(id.redundant.begin(), id.redundant.end(), 0);
      id.T.resize(0, n);
    } else {
      Matrix<Scalar> B(m, n);
      Index off = 0;
      for (int d : nbs) {
        const auto& blk = *state_.find(d, c);
        B.middleRows(off, blk.rows()) = blk;
        off += blk.rows();
      }
      SamplingPlan plan;
      std::uint64_t seed = mix_seed(opts_.seed, std::uint64_t(c));
      if (opts_.sampling == SamplingStrategy::gaussian) {
        plan = gaussian_plan(m, n, opts_.oversample, seed);
      } else if (opts_.sampling == SamplingStrategy::hybrid) {
        std::vector<Point> rp(rows.size()), sp(dofs.size());
        for (size_t i = 0; i < rows.size(); ++i) rp[i] = g_.coord(rows[i]);
        for (size_t i = 0; i < dofs.size(); ++i) sp[i] = g_.coord(dofs[i]);
        plan = build_hybrid_plan(rp, sp, radius_, n, opts_.oversample, seed);
      }
      if (out_.symmetric) {
        id = sampled_id(B, plan, opts_.eps, opts_.refine_id);
      } else {
        Matrix<Scalar> C(n, m);
        off = 0;
        for (int d : nbs) {
          const auto& blk = *state_.find(c, d);
          C.middleCols(off, blk.cols()) = blk;
          off += blk.cols();
        }
        id = joint_unsymmetric_id(B, C, plan, opts_.eps, opts_.refine_id);
      }
      if (Index(id.skeleton.size()) == n) return;
    }

    const auto& s = id.skeleton;
    const auto& r = id.redundant;
    const Matrix<Scalar>& X = state_.block(c, c);
    Matrix<Scalar> Ass = take(X, s, s), Asr = take(X, s, r), Ars = take(X, r, s), Arr = take(X, r, r);
    const Matrix<Scalar>& T = id.T;
    Matrix<Scalar> Asr1 = Asr - Ass * T;
    Matrix<Scalar> Ars2 = out_.symmetric ? Matrix<Scalar>(Asr1.adjoint()) : Matrix<Scalar>(Ars - T.adjoint() * Ass);
    Matrix<Scalar> Arr2 = Arr - Ars * T - T.adjoint() * Asr1;
    if (out_.symmetric) make_hermitian(Arr2);

    std::vector<int> sd(s.size()), rd(r.size());
    for (size_t i = 0; i < s.size(); ++i) sd[i] = dofs[size_t(s[i])];
    for (size_t i = 0; i < r.size(); ++i) rd[i] = dofs[size_t(r[i])];

    ElementaryFactor<Scalar> fs;
    fs.kind = FactorKind::sparsify;
    fs.level = level;
    fs.segment = c;
    fs.symmetric = out_.symmetric;
    fs.pivots = rd;
    fs.neighbors = sd;
    fs.T = T;

    ElementaryFactor<Scalar> fe;
    fe.kind = FactorKind::eliminate;
    fe.level = level;
    fe.segment = c;
    fe.symmetric = out_.symmetric;
    fe.pivots = rd;
    fe.neighbors = sd;
    Matrix<Scalar> upd = factor_pivot_block(Arr2, Asr1, Ars2, fe);
    Ass -= upd;
    if (out_.symmetric) make_hermitian(Ass);

    out_.factors.push_back(std::move(fs));
    out_.factors.push_back(std::move(fe));

    if (sd.empty()) {
      state_.remove(c);
      audit.check();
      return;
    }
    for (int d : nbs) {
      Matrix<Scalar> cut = take_cols(*state_.find(d, c), s);
      *state_.find(d, c) = std::move(cut);
      Matrix<Scalar> cutr = take_rows(*state_.find(c, d), s);
      *state_.find(c, d) = std::move(cutr);
    }
    *state_.find(c, c) = std::move(Ass);
    for (int v : rd) state_.cluster_of[size_t(v)] = -1;
    state_.assign(c, sd);
    audit.check();
  }

  void eliminate(int c, int level, int segment, int leaf) {
    Audit audit(*this, c);
    commit(prepare(c, level, segment, leaf));
    audit.check();
  }

  /// Concatenate the surviving level-l segments into their parents.
  void merge(int l) {
    const auto& segs = tree_.segments.all;
    std::map<int, std::vector<int>> groups;
    for (int id : tree_.level_segments(l)) {
      if (!state_.clusters[size_t(id)].active) continue;
      int parent = segs[size_t(id)].parent;
      if (parent < 0) throw Error("segment " + std::to_string(id) + " has no parent to merge into");
      groups[parent];
    }
    std::vector<int> target(state_.clusters.size(), -1);
    std::vector<Index> offset(state_.clusters.size(), 0);
    for (auto& [parent, kids] : groups) {
      Index off = 0;
      for (int ch : segs[size_t(parent)].children) {
        if (!state_.clusters[size_t(ch)].active) continue;
        kids.push_back(ch);
        target[size_t(ch)] = parent;
        offset[size_t(ch)] = off;
        off += state_.size(ch);
      }
    }
    std::vector<typename SchurState<Scalar>::Cluster> old(state_.clusters.size());
    for (auto& [parent, kids] : groups)
      for (int ch : kids) {
        old[size_t(ch)] = std::move(state_.clusters[size_t(ch)]);
        state_.clusters[size_t(ch)] = {};
      }
    for (auto& [parent, kids] : groups) {
      std::vector<int> dofs;
      for (int ch : kids) dofs.insert(dofs.end(), old[size_t(ch)].dofs.begin(), old[size_t(ch)].dofs.end());
      state_.clusters[size_t(parent)] = {};
      state_.assign(parent, std::move(dofs));
    }
    for (auto& [parent, kids] : groups)
      for (int ch : kids)
        for (auto& [d, blk] : old[size_t(ch)].blocks) {
          int q = target[size_t(d)];
          if (q < 0) throw Error("merge: neighbor cluster outside the level");
          auto& dst = state_.clusters[size_t(parent)].blocks;
          auto it = dst.find(q);
          if (it == dst.end())
            it = dst.emplace(q, Matrix<Scalar>::Zero(state_.size(parent), state_.size(q))).first;
          it->second.block(offset[size_t(ch)], offset[size_t(d)], blk.rows(), blk.cols()) = blk;
        }
  }

 private:
  struct Pending {
    int cluster = -1;
    std::vector<int> nbs;
    std::vector<Index> offsets;
    ElementaryFactor<Scalar> factor;
    Matrix<Scalar> update;
  };

  /// Bitwise snapshot of everything outside the cluster and its neighbors.
  class Audit {
   public:
    Audit(Factorizer& f, int c) : f_(f) {
      if (!f.opts_.audit) return;
      allowed_.assign(f.state_.clusters.size(), 0);
      allowed_[size_t(c)] = 1;
      for (int d : f.state_.neighbors(c)) allowed_[size_t(d)] = 1;
      snapshot_ = f.state_.clusters;
    }
    void check() {
      if (!f_.opts_.audit) return;
      ++f_.out_.stats.audited_factors;
      const auto& now = f_.state_.clusters;
      for (size_t a = 0; a < now.size(); ++a) {
        bool a_ok = allowed_[a];
        if (!a_ok && now[a].dofs != snapshot_[a].dofs) ++f_.out_.stats.audit_violations;
        auto outside = [&](int b) { return !a_ok || !allowed_[size_t(b)]; };
        for (const auto& [b, blk] : now[a].blocks) {
          if (!outside(b)) continue;
          auto it = snapshot_[a].blocks.find(b);
          if (it == snapshot_[a].blocks.end() || it->second.rows() != blk.rows() || it->second.cols() != blk.cols() ||
              it->second != blk)
            ++f_.out_.stats.audit_violations;
        }
        for (const auto& [b, blk] : snapshot_[a].blocks)
          if (outside(b) && !now[a].blocks.count(b)) ++f_.out_.stats.audit_violations;
      }
    }

   private:
    Factorizer& f_;
    std::vector<char> allowed_;
    std::vector<typename SchurState<Scalar>::Cluster> snapshot_;
  };

  static Matrix<Scalar> take_cols(const Matrix<Scalar>& X, const std::vector<int>& cols) {
    Matrix<Scalar> Y(X.rows(), Index(cols.size()));
    for (size_t j = 0; j < cols.size(); ++j) Y.col(Index(j)) = X.col(cols[j]);
    return Y;
  }
  static Matrix<Scalar> take_rows(const Matrix<Scalar>& X, const std::vector<int>& rows) {
    Matrix<Scalar> Y(Index(rows.size()), X.cols());
    for (size_t i = 0; i < rows.size(); ++i) Y.row(Index(i)) = X.row(rows[i]);
    return Y;
  }

  Pending prepare(int c, int level, int segment, int leaf) {
    Pending p;
    p.cluster = c;
    p.nbs = state_.neighbors(c);
    Index m = 0;
    for (int d : p.nbs) {
      p.offsets.push_back(m);
      m += state_.size(d);
    }
    const Index np = state_.size(c);
    auto& f = p.factor;
    f.kind = leaf >= 0 ? FactorKind::interior_lu : FactorKind::eliminate;
    f.level = level;
    f.segment = segment;
    f.leaf = leaf;
    f.symmetric = out_.symmetric;
    f.pivots = state_.clusters[size_t(c)].dofs;
    Matrix<Scalar> Anp(m, np), Apn;
    auto& row = state_.clusters[size_t(c)].blocks;
    for (size_t k = 0; k < p.nbs.size(); ++k) {
      const auto& dd = state_.clusters[size_t(p.nbs[k])].dofs;
      f.neighbors.insert(f.neighbors.end(), dd.begin(), dd.end());
      auto it = state_.clusters[size_t(p.nbs[k])].blocks.find(c);
      Anp.middleRows(p.offsets[k], it->second.rows()) = it->second;
    }
    if (!out_.symmetric) {
      Apn.resize(np, m);
      for (size_t k = 0; k < p.nbs.size(); ++k) {
        const auto& blk = row.at(p.nbs[k]);
        Apn.middleCols(p.offsets[k], blk.cols()) = blk;
      }
    }
    auto self = row.find(c);
    Matrix<Scalar> App = self == row.end() ? Matrix<Scalar>::Zero(np, np) : self->second;
    p.update = factor_detail::factor_pivot_block(App, Anp, Apn, f);
    return p;
  }

  void commit(Pending p) {
    for (size_t a = 0; a < p.nbs.size(); ++a)
      for (size_t b = 0; b < p.nbs.size(); ++b) {
        int ca = p.nbs[a], cb = p.nbs[b];
        Index ra = state_.size(ca), rb = state_.size(cb);
        if (out_.symmetric && b > a) continue;
        auto& blk = state_.block(ca, cb);
        blk -= p.update.block(p.offsets[a], p.offsets[b], ra, rb);
        if (out_.symmetric) {
          if (a == b)
            make_hermitian(blk);
          else
            state_.block(cb, ca) = blk.adjoint();
        }
      }
    state_.remove(p.cluster);
    out_.factors.push_back(std::move(p.factor));
  }

  const SparseMatrix<Scalar>& A_;
  const Graph& g_;
  const DissectionTree& tree_;
  FactorOptions opts_;
  SchurState<Scalar> state_;
  SpaluFactorization<Scalar> out_;
  int leaf_base_ = 0;
  double radius_ = 0;
};

/// Leaves first, then per level: sparsify, eliminate, merge.
template <class Scalar>
SpaluFactorization<Scalar> factorize(const SparseMatrix<Scalar>& A, const Graph& g, const DissectionTree& tree,
                                     const FactorOptions& opts = {}) {
  return Factorizer<Scalar>(A, g, tree, opts).run();
}

}  // namespace spalu

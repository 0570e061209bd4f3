#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "spalu/core.hpp"

namespace spalu {

using Point = Eigen::Vector2d;

/// Undirected adjacency structure with vertex coordinates.
class Graph {
 public:
  Graph() = default;
  /// `adj[v]` may be unsorted and contain duplicates or v itself; they are
  /// cleaned and symmetrized here.
  Graph(std::vector<std::vector<int>> adj, std::vector<Point> coords);

  template <class Scalar>
  static Graph from_matrix(const SparseMatrix<Scalar>& A, std::vector<Point> coords) {
    std::vector<std::vector<int>> adj(static_cast<size_t>(A.rows()));
    for (Index i = 0; i < A.outerSize(); ++i)
      for (typename SparseMatrix<Scalar>::InnerIterator it(A, i); it; ++it)
        if (it.col() != i) adj[size_t(i)].push_back(int(it.col()));
    return Graph(std::move(adj), std::move(coords));
  }

  int size() const { return int(offsets_.size()) - 1; }
  std::span<const int> neighbors(int v) const {
    return {adj_.data() + offsets_[size_t(v)], size_t(offsets_[size_t(v) + 1] - offsets_[size_t(v)])};
  }
  int degree(int v) const { return offsets_[size_t(v) + 1] - offsets_[size_t(v)]; }
  const Point& coord(int v) const { return coords_[size_t(v)]; }
  const std::vector<Point>& coords() const { return coords_; }
  long num_edges() const { return long(adj_.size()) / 2; }

  /// Median Euclidean length over all edges (0 for edgeless graphs).
  double median_edge_length() const;

 private:
  std::vector<int> offsets_{0};
  std::vector<int> adj_;
  std::vector<Point> coords_;
};

/// Connected components of the subgraph induced by `subset`, each sorted,
/// ordered by smallest member.
std::vector<IndexSet> components(const Graph& g, const IndexSet& subset);

Graph grid_graph(int nx, int ny);
Graph path_graph(int n);
Graph star_graph(int leaves);

}  // namespace spalu

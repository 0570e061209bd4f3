#pragma once

#include <string>
#include <vector>

#include "spalu/core.hpp"
#include "spalu/graph.hpp"

namespace spalu {

/// cos(u - v, d) + theta * cos(u - c, d); the second term is 0 when u == c.
double degree_bias(const Point& u, const Point& v, const Point& c, const Point& d, double theta);

struct SeparatorWalk {
  std::vector<int> walk;  // connected path, in walk order
  Point direction;
  int center = -1;
};

/// Walk from the vertex nearest the coordinate median of `subset` along the
/// degree-bias direction, then along the opposite one. Throws
/// DegenerateSeparatorError when the center has no neighbor in `subset`.
SeparatorWalk find_separator(const Graph& g, const IndexSet& subset, double theta = 0.1);

enum class SegmentKind { regular, junction };

struct Segment {
  int id = -1;
  int owner_level = 0;  // level of the separator this piece belongs to
  int owner = -1;       // tree node of that separator
  int split_level = 0;  // level of the segment list holding this piece
  int ordinal = 0;
  IndexSet vertices;
  SegmentKind kind = SegmentKind::regular;
  int parent = -1;  // segment at split_level - 1
  std::vector<int> children;
};

/// Segment store shared by the dissection and the factorization.
struct SegmentTable {
  std::vector<Segment> all;
  std::vector<std::vector<int>> levels;  // levels[j]: ids in the list of split level j

  int add(Segment s) {
    s.id = int(all.size());
    all.push_back(std::move(s));
    return all.back().id;
  }
};

/// Replaces every regular segment of `boundary` that has vertices adjacent to
/// `separator` by its pieces: the adjacent vertices form a junction, the rest
/// splits into connected regular pieces. New segments are appended to `table`
/// with the parent of the segment they replace; returned list keeps order.
std::vector<int> split_boundary_segments(const Graph& g, SegmentTable& table,
                                         const std::vector<int>& boundary, const IndexSet& separator);

struct TreeNode {
  int level = 1;  // root is 1
  int parent = -1;
  int child[2] = {-1, -1};
  IndexSet vertices;
  IndexSet separator;
  std::vector<int> walk;
  Point direction = Point::Zero();
  int segment = -1;  // the separator as a segment of its own level
  bool leaf = true;
};

struct DissectionOptions {
  int leaf_size = 64;
  double theta = 0.1;
};

struct DissectionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  int levels = 0;               // deepest separator level L
  SegmentTable segments;
  Permutation order;  // position -> vertex: leaves, then separators after their children
  std::vector<int> leaves;

  const std::vector<int>& level_segments(int l) const { return segments.levels[size_t(l)]; }
};

DissectionTree build_dissection(const Graph& g, const DissectionOptions& opts = {});

/// Tree summary: node sizes, separator sizes and segment ids per level.
std::string dissection_json(const DissectionTree& tree);

/// Number of edges created by symbolic elimination in `order` (position -> vertex).
long fill_in_count(const Graph& g, const Permutation& order);

Permutation natural_order(const Graph& g);
Permutation minimum_degree_order(const Graph& g);

}  // namespace spalu

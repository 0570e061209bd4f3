#include "spalu/dissection.hpp"

#include <cmath>
#include <map>
#include <queue>
#include <set>

#include <json.hpp>

namespace spalu {

double degree_bias(const Point& u, const Point& v, const Point& c, const Point& d, double theta) {
  const double dn = d.norm();
  Point uv = u - v;
  double first = uv.dot(d) / (uv.norm() * dn);
  Point uc = u - c;
  double nc = uc.norm();
  double second = nc == 0 ? 0.0 : uc.dot(d) / (nc * dn);
  return first + theta * second;
}

namespace {

// Membership tags and component labels reused across tree nodes.
class Scratch {
 public:
  explicit Scratch(int n) : tag_(size_t(n), 0), label_(size_t(n), -1) {}

  int mark(const std::vector<int>& vs) {
    ++gen_;
    for (int v : vs) tag_[size_t(v)] = gen_;
    return gen_;
  }
  bool in(int v, int g) const { return tag_[size_t(v)] == g; }
  void drop(int v) { tag_[size_t(v)] = 0; }

  // Components of the vertices tagged `g` among `vs`, ordered by smallest member.
  std::vector<std::vector<int>> components(const Graph& graph, const std::vector<int>& vs, int g) {
    std::vector<std::vector<int>> out;
    for (int v : vs) label_[size_t(v)] = -1;
    std::vector<int> stack;
    for (int s : vs) {
      if (!in(s, g) || label_[size_t(s)] != -1) continue;
      int id = int(out.size());
      out.emplace_back();
      label_[size_t(s)] = id;
      stack.push_back(s);
      while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        out.back().push_back(v);
        for (int u : graph.neighbors(v))
          if (in(u, g) && label_[size_t(u)] == -1) {
            label_[size_t(u)] = id;
            stack.push_back(u);
          }
      }
    }
    for (auto& c : out) std::sort(c.begin(), c.end());
    return out;
  }

 private:
  std::vector<int> tag_;
  std::vector<int> label_;
  int gen_ = 0;
};

template <class InSubset>
SeparatorWalk walk_separator(const Graph& g, const std::vector<int>& subset, InSubset in_subset,
                             double theta) {
  if (subset.empty()) throw DegenerateSeparatorError("empty subset");
  const size_t n = subset.size();
  std::vector<double> xs(n), ys(n);
  for (size_t i = 0; i < n; ++i) {
    xs[i] = g.coord(subset[i]).x();
    ys[i] = g.coord(subset[i]).y();
  }
  auto median = [](std::vector<double> v) {
    size_t h = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + long(h), v.end());
    double hi = v[h];
    if (v.size() % 2) return hi;
    double lo = *std::max_element(v.begin(), v.begin() + long(h));
    return 0.5 * (lo + hi);
  };
  const Point med(median(xs), median(ys));
  int c = subset[0];
  double best = (g.coord(c) - med).squaredNorm();
  for (int v : subset) {
    double d2 = (g.coord(v) - med).squaredNorm();
    if (d2 < best) {
      best = d2;
      c = v;
    }
  }
  const double width = *std::max_element(xs.begin(), xs.end()) - *std::min_element(xs.begin(), xs.end());
  const double height = *std::max_element(ys.begin(), ys.end()) - *std::min_element(ys.begin(), ys.end());
  const Point d = width < height ? Point(1, 0) : Point(0, 1);

  bool isolated = true;
  for (int u : g.neighbors(c))
    if (in_subset(u)) isolated = false;
  if (isolated) throw DegenerateSeparatorError("separator center has no neighbor in the subgraph");

  const int cap = int(std::ceil(4 * std::sqrt(double(n))));
  std::set<int> taken{c};
  auto extend = [&](const Point& dir) {
    std::vector<int> path;
    int v = c;
    for (int step = 0; step < cap; ++step) {
      int next = -1;
      double score = 0;
      for (int u : g.neighbors(v)) {  // ascending, so ties keep the lowest index
        if (!in_subset(u) || taken.count(u)) continue;
        if ((g.coord(u) - g.coord(v)).dot(dir) <= 0) continue;  // Next() moves along dir
        double s = degree_bias(g.coord(u), g.coord(v), g.coord(c), dir, theta);
        if (next < 0 || s > score) {
          next = u;
          score = s;
        }
      }
      if (next < 0 || score <= 0) break;
      taken.insert(next);
      path.push_back(next);
      v = next;
      bool at_edge = false;
      for (int u : g.neighbors(v))
        if (!in_subset(u)) at_edge = true;
      if (at_edge) break;
    }
    return path;
  };
  std::vector<int> fwd = extend(d);
  std::vector<int> back = extend(-d);
  SeparatorWalk w;
  w.walk.assign(back.rbegin(), back.rend());
  w.walk.push_back(c);
  w.walk.insert(w.walk.end(), fwd.begin(), fwd.end());
  w.direction = d;
  w.center = c;
  return w;
}

}  // namespace

SeparatorWalk find_separator(const Graph& g, const IndexSet& subset, double theta) {
  return walk_separator(g, subset.ids(), [&](int v) { return subset.contains(v); }, theta);
}

std::vector<int> split_boundary_segments(const Graph& g, SegmentTable& table,
                                         const std::vector<int>& boundary, const IndexSet& separator) {
  std::vector<int> out;
  for (int id : boundary) {
    const Segment seg = table.all[size_t(id)];
    if (seg.kind == SegmentKind::junction) {
      out.push_back(id);
      continue;
    }
    std::vector<int> junction, rest;
    for (int v : seg.vertices) {
      bool touches = false;
      for (int u : g.neighbors(v))
        if (separator.contains(u)) touches = true;
      (touches ? junction : rest).push_back(v);
    }
    if (junction.empty()) {
      out.push_back(id);
      continue;
    }
    std::vector<int> pieces;
    auto add = [&](std::vector<int> vs, SegmentKind kind) {
      Segment s;
      s.owner_level = seg.owner_level;
      s.owner = seg.owner;
      s.split_level = seg.split_level;
      s.vertices = IndexSet(std::move(vs));
      s.kind = kind;
      s.parent = seg.parent;
      pieces.push_back(table.add(std::move(s)));
    };
    for (auto& comp : components(g, IndexSet(rest))) add(comp.ids(), SegmentKind::regular);
    add(junction, SegmentKind::junction);
    if (seg.parent >= 0) {
      auto& kids = table.all[size_t(seg.parent)].children;
      auto it = std::find(kids.begin(), kids.end(), id);
      if (it != kids.end()) it = kids.erase(it);
      kids.insert(it, pieces.begin(), pieces.end());
    }
    out.insert(out.end(), pieces.begin(), pieces.end());
  }
  return out;
}

namespace {

// Minimum degree on the subgraph induced by a leaf.
void leaf_order(const Graph& g, const IndexSet& vs, std::vector<int>& out) {
  const int n = int(vs.size());
  std::vector<std::vector<int>> adj(static_cast<size_t>(n));
  std::vector<Point> xy(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    xy[size_t(i)] = g.coord(vs[i]);
    for (int u : g.neighbors(vs[i]))
      if (Index j = vs.find(u); j >= 0) adj[size_t(i)].push_back(int(j));
  }
  Permutation p = minimum_degree_order(Graph(std::move(adj), std::move(xy)));
  for (int i = 0; i < n; ++i) out.push_back(vs[p(i)]);
}

}  // namespace

DissectionTree build_dissection(const Graph& g, const DissectionOptions& opts) {
  if (opts.leaf_size < 1) throw ConfigError("leaf size must be at least 1");
  const int N = g.size();
  DissectionTree t;
  Scratch scratch(N);
  std::vector<int> seg_of(size_t(N), -1);
  std::vector<int> walk_pos(size_t(N), -1);
  t.segments.levels.emplace_back();  // split level 0 is unused

  TreeNode root;
  root.vertices = IndexSet::range(0, N);
  t.nodes.push_back(root);
  std::vector<int> frontier{0};

  for (int depth = 1; !frontier.empty(); ++depth) {
    bool any_big = false;
    for (int id : frontier)
      if (t.nodes[size_t(id)].vertices.size() > opts.leaf_size) any_big = true;
    if (!any_big) break;

    // The list of this level starts as a copy of the previous one.
    std::vector<int> cur;
    if (depth > 1) {
      for (int pid : t.segments.levels[size_t(depth - 1)]) {
        Segment s = t.segments.all[size_t(pid)];
        s.split_level = depth;
        s.parent = pid;
        s.children.clear();
        int sid = t.segments.add(std::move(s));
        t.segments.all[size_t(pid)].children.push_back(sid);
        cur.push_back(sid);
        for (int v : t.segments.all[size_t(sid)].vertices) seg_of[size_t(v)] = sid;
      }
    }

    std::vector<int> next;
    bool split_any = false;
    for (int nid : frontier) {
      const IndexSet V = t.nodes[size_t(nid)].vertices;
      if (V.size() <= opts.leaf_size) continue;
      const int gV = scratch.mark(V.ids());

      std::vector<int> walk;
      Point dir = Point::Zero();
      std::vector<std::vector<int>> parts = scratch.components(g, V.ids(), gV);
      if (parts.size() < 2) {
        SeparatorWalk w;
        try {
          w = walk_separator(g, V.ids(), [&](int v) { return scratch.in(v, gV); }, opts.theta);
        } catch (const DegenerateSeparatorError&) {
          continue;
        }
        walk = w.walk;
        dir = w.direction;
        for (int v : walk) scratch.drop(v);
        parts = scratch.components(g, V.ids(), gV);
        if (parts.size() < 2) {
          // The walk left a gap: move vertices straddling its line into the separator.
          const Point nrm(-dir.y(), dir.x());
          const Point& c = g.coord(w.center);
          auto below = [&](int v) { return (g.coord(v) - c).dot(nrm) < 0; };
          std::vector<int> moved;
          for (int v : V)
            if (scratch.in(v, gV) && below(v))
              for (int u : g.neighbors(v))
                if (scratch.in(u, gV) && !below(u)) {
                  moved.push_back(v);
                  break;
                }
          for (int v : moved) scratch.drop(v);
          walk.insert(walk.end(), moved.begin(), moved.end());
          parts = scratch.components(g, V.ids(), gV);
        }
        if (parts.size() < 2) continue;
      }

      // Two sides by greedy packing of the components, largest first.
      std::vector<size_t> idx(parts.size());
      std::iota(idx.begin(), idx.end(), 0);
      std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return parts[a].size() > parts[b].size(); });
      std::vector<int> side[2];
      for (size_t i : idx) {
        int s = side[0].size() <= side[1].size() ? 0 : 1;
        side[s].insert(side[s].end(), parts[i].begin(), parts[i].end());
      }

      split_any = true;
      TreeNode& node = t.nodes[size_t(nid)];
      node.leaf = false;
      node.walk = walk;
      node.separator = IndexSet(walk);
      node.direction = dir;
      for (size_t i = 0; i < walk.size(); ++i) walk_pos[size_t(walk[i])] = int(i);

      if (!node.separator.empty()) {
        // Boundary segments touched by the new separator.
        std::vector<int> touched;
        for (int s : node.separator)
          for (int u : g.neighbors(s)) {
            int sid = seg_of[size_t(u)];
            if (sid >= 0 && !V.contains(u) && t.segments.all[size_t(sid)].kind == SegmentKind::regular)
              touched.push_back(sid);
          }
        std::sort(touched.begin(), touched.end());
        touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
        if (!touched.empty()) {
          std::vector<int> pieces = split_boundary_segments(g, t.segments, touched, node.separator);
          std::set<int> gone(touched.begin(), touched.end());
          for (int p : pieces) gone.erase(p);
          std::vector<int> kept;
          for (int sid : cur)
            if (!gone.count(sid)) kept.push_back(sid);
          for (int p : pieces)
            if (!std::binary_search(touched.begin(), touched.end(), p)) {
              kept.push_back(p);
              for (int v : t.segments.all[size_t(p)].vertices) seg_of[size_t(v)] = p;
            }
          cur.swap(kept);
        }
        Segment s;
        s.owner_level = depth;
        s.owner = nid;
        s.split_level = depth;
        s.vertices = node.separator;
        int sid = t.segments.add(std::move(s));
        t.nodes[size_t(nid)].segment = sid;
        for (int v : t.segments.all[size_t(sid)].vertices) seg_of[size_t(v)] = sid;
        cur.push_back(sid);
      }

      for (int k = 0; k < 2; ++k) {
        TreeNode child;
        child.level = depth + 1;
        child.parent = nid;
        child.vertices = IndexSet(std::move(side[k]));
        int cid = int(t.nodes.size());
        t.nodes.push_back(std::move(child));
        t.nodes[size_t(nid)].child[k] = cid;
        next.push_back(cid);
      }
    }

    // Ordinals follow walk position inside each owner separator.
    std::stable_sort(cur.begin(), cur.end(), [&](int a, int b) {
      const Segment& A = t.segments.all[size_t(a)];
      const Segment& B = t.segments.all[size_t(b)];
      if (A.owner_level != B.owner_level) return A.owner_level < B.owner_level;
      if (A.owner != B.owner) return A.owner < B.owner;
      auto first = [&](const Segment& s) {
        int m = INT32_MAX;
        for (int v : s.vertices) m = std::min(m, walk_pos[size_t(v)]);
        return m;
      };
      return first(A) < first(B);
    });
    for (size_t i = 0; i < cur.size(); ++i) {
      Segment& s = t.segments.all[size_t(cur[i])];
      s.ordinal = (i > 0 && t.segments.all[size_t(cur[i - 1])].owner == s.owner)
                      ? t.segments.all[size_t(cur[i - 1])].ordinal + 1
                      : 1;
    }
    t.segments.levels.push_back(std::move(cur));
    if (split_any) t.levels = depth;
    frontier.swap(next);
  }
  t.segments.levels.resize(size_t(t.levels) + 1);
  for (int id : t.segments.levels[size_t(t.levels)]) t.segments.all[size_t(id)].children.clear();

  // Post-order: children first, then the separator.
  std::vector<int> order;
  order.reserve(size_t(N));
  std::vector<std::pair<int, bool>> stack{{0, false}};
  while (!stack.empty()) {
    auto [id, expanded] = stack.back();
    stack.pop_back();
    const TreeNode& nd = t.nodes[size_t(id)];
    if (nd.leaf) {
      t.leaves.push_back(id);
      leaf_order(g, nd.vertices, order);
    } else if (expanded) {
      order.insert(order.end(), nd.separator.begin(), nd.separator.end());
    } else {
      stack.push_back({id, true});
      stack.push_back({nd.child[1], false});
      stack.push_back({nd.child[0], false});
    }
  }
  t.order = Permutation(std::move(order));
  return t;
}

std::string dissection_json(const DissectionTree& t) {
  nlohmann::json j;
  j["levels"] = t.levels;
  auto& nodes = j["nodes"] = nlohmann::json::array();
  for (size_t i = 0; i < t.nodes.size(); ++i) {
    const TreeNode& n = t.nodes[i];
    nodes.push_back({{"id", i},
                     {"level", n.level},
                     {"parent", n.parent},
                     {"children", {n.child[0], n.child[1]}},
                     {"vertices", n.vertices.size()},
                     {"separator", n.separator.size()},
                     {"segment", n.segment},
                     {"leaf", n.leaf}});
  }
  auto& lv = j["segments"] = nlohmann::json::array();
  for (int l = 1; l <= t.levels; ++l) {
    nlohmann::json segs = nlohmann::json::array();
    for (int id : t.level_segments(l)) {
      const Segment& s = t.segments.all[size_t(id)];
      segs.push_back({{"id", s.id},
                      {"owner", s.owner},
                      {"owner_level", s.owner_level},
                      {"ordinal", s.ordinal},
                      {"kind", s.kind == SegmentKind::regular ? "regular" : "junction"},
                      {"size", s.vertices.size()},
                      {"parent", s.parent}});
    }
    lv.push_back({{"level", l}, {"segments", segs}});
  }
  return j.dump(1);
}

long fill_in_count(const Graph& g, const Permutation& order) {
  const int N = g.size();
  if (order.size() != N) throw DimensionError("ordering size does not match graph");
  std::vector<int> parent(size_t(N), -1), ancestor(size_t(N), -1), mark(size_t(N), -1);
  // Elimination tree in position space.
  for (int i = 0; i < N; ++i)
    for (int u : g.neighbors(order(i))) {
      int r = order.inverse_at(u);
      if (r >= i) continue;
      while (ancestor[size_t(r)] != -1 && ancestor[size_t(r)] != i) {
        int nx = ancestor[size_t(r)];
        ancestor[size_t(r)] = i;
        r = nx;
      }
      if (ancestor[size_t(r)] == -1) {
        ancestor[size_t(r)] = i;
        parent[size_t(r)] = i;
      }
    }
  long lower = 0;
  for (int i = 0; i < N; ++i) {
    mark[size_t(i)] = i;
    for (int u : g.neighbors(order(i))) {
      int r = order.inverse_at(u);
      if (r >= i) continue;
      while (mark[size_t(r)] != i) {
        ++lower;
        mark[size_t(r)] = i;
        r = parent[size_t(r)];
      }
    }
  }
  return lower - g.num_edges();
}

Permutation natural_order(const Graph& g) { return Permutation::identity(g.size()); }

Permutation minimum_degree_order(const Graph& g) {
  const int N = g.size();
  std::vector<std::set<int>> adj(static_cast<size_t>(N));
  for (int v = 0; v < N; ++v) adj[size_t(v)].insert(g.neighbors(v).begin(), g.neighbors(v).end());
  std::vector<char> done(size_t(N), 0);
  using Item = std::pair<size_t, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
  for (int v = 0; v < N; ++v) heap.push({adj[size_t(v)].size(), v});
  std::vector<int> order;
  order.reserve(size_t(N));
  while (!heap.empty()) {
    auto [deg, v] = heap.top();
    heap.pop();
    if (done[size_t(v)] || deg != adj[size_t(v)].size()) continue;
    done[size_t(v)] = 1;
    order.push_back(v);
    std::vector<int> nb(adj[size_t(v)].begin(), adj[size_t(v)].end());
    for (int a : nb) {
      adj[size_t(a)].erase(v);
      for (int b : nb)
        if (a != b) adj[size_t(a)].insert(b);
    }
    for (int a : nb) heap.push({adj[size_t(a)].size(), a});
    adj[size_t(v)].clear();
  }
  return Permutation(std::move(order));
}

}  // namespace spalu

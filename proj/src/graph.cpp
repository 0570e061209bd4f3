#include "spalu/graph.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace spalu {

Graph::Graph(std::vector<std::vector<int>> adj, std::vector<Point> coords)
    : coords_(std::move(coords)) {
  const size_t n = adj.size();
  if (coords_.size() != n) throw DimensionError("graph needs one coordinate per vertex");
  std::vector<std::vector<int>> sym(n);
  for (size_t v = 0; v < n; ++v)
    for (int u : adj[v]) {
      if (u < 0 || size_t(u) >= n) throw BoundsError("graph neighbor out of range");
      if (size_t(u) == v) continue;
      sym[v].push_back(u);
      sym[size_t(u)].push_back(int(v));
    }
  offsets_.assign(n + 1, 0);
  for (size_t v = 0; v < n; ++v) {
    auto& a = sym[v];
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    offsets_[v + 1] = offsets_[v] + int(a.size());
  }
  adj_.reserve(size_t(offsets_[n]));
  for (auto& a : sym) adj_.insert(adj_.end(), a.begin(), a.end());
}

double Graph::median_edge_length() const {
  std::vector<double> len;
  for (int v = 0; v < size(); ++v)
    for (int u : neighbors(v))
      if (u > v) len.push_back((coord(u) - coord(v)).norm());
  if (len.empty()) return 0.0;
  auto mid = len.begin() + long(len.size() / 2);
  std::nth_element(len.begin(), mid, len.end());
  return *mid;
}

std::vector<IndexSet> components(const Graph& g, const IndexSet& subset) {
  std::unordered_map<int, int> label;
  label.reserve(size_t(subset.size()) * 2);
  for (int v : subset) label.emplace(v, -1);
  std::vector<std::vector<int>> out;
  std::vector<int> stack;
  for (int s : subset) {
    if (label[s] != -1) continue;
    int id = int(out.size());
    out.emplace_back();
    label[s] = id;
    stack.push_back(s);
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      out.back().push_back(v);
      for (int u : g.neighbors(v)) {
        auto it = label.find(u);
        if (it != label.end() && it->second == -1) {
          it->second = id;
          stack.push_back(u);
        }
      }
    }
  }
  std::vector<IndexSet> sets;
  sets.reserve(out.size());
  for (auto& c : out) sets.emplace_back(std::move(c));
  return sets;
}

Graph grid_graph(int nx, int ny) {
  std::vector<std::vector<int>> adj(size_t(nx) * size_t(ny));
  std::vector<Point> xy(adj.size());
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      int v = j * nx + i;
      xy[size_t(v)] = Point(i, j);
      if (i + 1 < nx) adj[size_t(v)].push_back(v + 1);
      if (j + 1 < ny) adj[size_t(v)].push_back(v + nx);
    }
  return Graph(std::move(adj), std::move(xy));
}

Graph path_graph(int n) { return grid_graph(n, 1); }

Graph star_graph(int leaves) {
  std::vector<std::vector<int>> adj(size_t(leaves) + 1);
  std::vector<Point> xy(adj.size(), Point(0, 0));
  for (int k = 1; k <= leaves; ++k) {
    adj[0].push_back(k);
    double t = 2 * 3.141592653589793 * k / leaves;
    xy[size_t(k)] = Point(std::cos(t), std::sin(t));
  }
  return Graph(std::move(adj), std::move(xy));
}

}  // namespace spalu

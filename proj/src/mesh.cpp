#include "spalu/mesh.hpp"

#include <cmath>
#include <random>
#include <unordered_set>

namespace spalu {

namespace {

double orient(const Point& a, const Point& b, const Point& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

// > 0 when d lies strictly inside the circumcircle of the counterclockwise triangle abc.
double incircle(const Point& a, const Point& b, const Point& c, const Point& d) {
  double adx = a.x() - d.x(), ady = a.y() - d.y();
  double bdx = b.x() - d.x(), bdy = b.y() - d.y();
  double cdx = c.x() - d.x(), cdy = c.y() - d.y();
  double ad = adx * adx + ady * ady, bd = bdx * bdx + bdy * bdy, cd = cdx * cdx + cdy * cdy;
  return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
}

bool segments_cross(const Point& a, const Point& b, const Point& c, const Point& d) {
  double o1 = orient(a, b, c), o2 = orient(a, b, d), o3 = orient(c, d, a), o4 = orient(c, d, b);
  if (((o1 > 0 && o2 < 0) || (o1 < 0 && o2 > 0)) && ((o3 > 0 && o4 < 0) || (o3 < 0 && o4 > 0)))
    return true;
  auto on = [](const Point& p, const Point& q, const Point& r, double o) {
    return o == 0 && std::min(p.x(), q.x()) <= r.x() && r.x() <= std::max(p.x(), q.x()) &&
           std::min(p.y(), q.y()) <= r.y() && r.y() <= std::max(p.y(), q.y());
  };
  return on(a, b, c, o1) || on(a, b, d, o2) || on(c, d, a, o3) || on(c, d, b, o4);
}

double segment_distance(const Point& p, const Point& a, const Point& b) {
  Point ab = b - a;
  double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (uint64_t(uint32_t(a)) << 32) | uint32_t(b);
}

// Bowyer-Watson triangulation with neighbor links. nb[k] is across the edge
// opposite v[k].
class Delaunay {
 public:
  struct Tri {
    std::array<int, 3> v;
    std::array<int, 3> nb;
    bool alive;
  };

  Delaunay(const Point& lo, const Point& hi) {
    Point c = 0.5 * (lo + hi);
    double r = 10 * std::max(hi.x() - lo.x(), hi.y() - lo.y()) + 1;
    pts_ = {c + Point(-2 * r, -r), c + Point(2 * r, -r), c + Point(0, 2 * r)};
    tris_.push_back({{0, 1, 2}, {-1, -1, -1}, true});
  }

  static constexpr int kSuper = 3;

  int insert(const Point& p) {
    int t = locate(p);
    int id = int(pts_.size());
    for (int k = 0; k < 3; ++k)
      if (pts_[size_t(tris_[size_t(t)].v[size_t(k)])] == p) return tris_[size_t(t)].v[size_t(k)];
    pts_.push_back(p);

    bad_.clear();
    stack_.assign(1, t);
    tris_[size_t(t)].alive = false;
    while (!stack_.empty()) {
      int b = stack_.back();
      stack_.pop_back();
      bad_.push_back(b);
      for (int n : tris_[size_t(b)].nb) {
        if (n < 0 || !tris_[size_t(n)].alive) continue;
        const auto& v = tris_[size_t(n)].v;
        if (incircle(pts_[size_t(v[0])], pts_[size_t(v[1])], pts_[size_t(v[2])], p) > 0) {
          tris_[size_t(n)].alive = false;
          stack_.push_back(n);
        }
      }
    }

    // Cavity boundary edges (a, b) with the live triangle outside them.
    struct Edge {
      int a, b, out;
    };
    std::vector<Edge> rim;
    for (int b : bad_) {
      const Tri& tr = tris_[size_t(b)];
      for (int k = 0; k < 3; ++k) {
        int n = tr.nb[size_t(k)];
        if (n >= 0 && !tris_[size_t(n)].alive) continue;
        rim.push_back({tr.v[size_t((k + 1) % 3)], tr.v[size_t((k + 2) % 3)], n});
      }
    }
    std::vector<int> made(rim.size());
    for (size_t e = 0; e < rim.size(); ++e) {
      int slot;
      if (e < bad_.size()) {
        slot = bad_[e];
      } else {
        slot = int(tris_.size());
        tris_.emplace_back();
      }
      made[e] = slot;
      tris_[size_t(slot)] = {{rim[e].a, rim[e].b, id}, {-1, -1, rim[e].out}, true};
      if (int n = rim[e].out; n >= 0) {
        auto& on = tris_[size_t(n)];
        for (int k = 0; k < 3; ++k) {
          int a = on.v[size_t((k + 1) % 3)], b = on.v[size_t((k + 2) % 3)];
          if (a == rim[e].b && b == rim[e].a) on.nb[size_t(k)] = slot;
        }
      }
    }
    for (size_t e = 0; e < rim.size(); ++e)
      for (size_t f = 0; f < rim.size(); ++f) {
        if (rim[f].a == rim[e].b) tris_[size_t(made[e])].nb[0] = made[f];
        if (rim[f].b == rim[e].a) tris_[size_t(made[e])].nb[1] = made[f];
      }
    last_ = made[0];
    return id;
  }

  bool has_edge(int a, int b) const { return edges_.count(edge_key(a, b)) > 0; }

  void index_edges() {
    edges_.clear();
    for (const auto& t : tris_)
      if (t.alive)
        for (int k = 0; k < 3; ++k) edges_.insert(edge_key(t.v[size_t(k)], t.v[size_t((k + 1) % 3)]));
  }

  const std::vector<Tri>& tris() const { return tris_; }
  const std::vector<Point>& pts() const { return pts_; }

 private:
  int locate(const Point& p) {
    int t = last_;
    if (t < 0 || size_t(t) >= tris_.size() || !tris_[size_t(t)].alive) t = any_alive();
    for (size_t steps = 0; steps < 4 * tris_.size() + 16; ++steps) {
      const Tri& tr = tris_[size_t(t)];
      int next = -1;
      int start = int(steps % 3);
      for (int j = 0; j < 3; ++j) {
        int k = (start + j) % 3;
        const Point& a = pts_[size_t(tr.v[size_t((k + 1) % 3)])];
        const Point& b = pts_[size_t(tr.v[size_t((k + 2) % 3)])];
        if (orient(a, b, p) < 0) {
          next = tr.nb[size_t(k)];
          break;
        }
      }
      if (next < 0) return t;
      t = next;
    }
    for (size_t i = 0; i < tris_.size(); ++i) {
      const Tri& tr = tris_[i];
      if (!tr.alive) continue;
      const auto& v = tr.v;
      if (orient(pts_[size_t(v[0])], pts_[size_t(v[1])], p) >= 0 &&
          orient(pts_[size_t(v[1])], pts_[size_t(v[2])], p) >= 0 &&
          orient(pts_[size_t(v[2])], pts_[size_t(v[0])], p) >= 0)
        return int(i);
    }
    throw GeometryError("point location failed in triangulation");
  }

  int any_alive() const {
    for (size_t i = tris_.size(); i-- > 0;)
      if (tris_[i].alive) return int(i);
    return 0;
  }

  std::vector<Point> pts_;
  std::vector<Tri> tris_;
  std::vector<int> bad_, stack_;
  std::unordered_set<uint64_t> edges_;
  int last_ = 0;
};

}  // namespace

double Mesh2D::area(int t) const {
  const auto& v = triangles[size_t(t)];
  return 0.5 * orient(vertices[size_t(v[0])], vertices[size_t(v[1])], vertices[size_t(v[2])]);
}

long Mesh2D::num_edges() const {
  std::unordered_set<uint64_t> e;
  for (const auto& t : triangles)
    for (int k = 0; k < 3; ++k) e.insert(edge_key(t[size_t(k)], t[size_t((k + 1) % 3)]));
  return long(e.size());
}

Mesh2D make_structured_mesh(int nx, int ny, Rect d) {
  if (nx < 2 || ny < 2) throw ConfigError("structured mesh needs nx, ny >= 2");
  Mesh2D m;
  m.vertices.reserve(size_t(nx) * size_t(ny));
  m.marker.reserve(m.vertices.capacity());
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      double x = i == nx - 1 ? d.x1 : d.x0 + (d.x1 - d.x0) * i / (nx - 1);
      double y = j == ny - 1 ? d.y1 : d.y0 + (d.y1 - d.y0) * j / (ny - 1);
      m.vertices.emplace_back(x, y);
      bool edge = i == 0 || j == 0 || i == nx - 1 || j == ny - 1;
      m.marker.push_back(edge ? BoundaryKind::dirichlet : BoundaryKind::interior);
    }
  m.triangles.reserve(2 * size_t(nx - 1) * size_t(ny - 1));
  for (int j = 0; j + 1 < ny; ++j)
    for (int i = 0; i + 1 < nx; ++i) {
      int v00 = j * nx + i, v10 = v00 + 1, v01 = v00 + nx, v11 = v01 + 1;
      m.triangles.push_back({v00, v10, v11});
      m.triangles.push_back({v00, v11, v01});
    }
  return m;
}

bool point_in_polygon(const Point& p, const std::vector<Point>& poly) {
  bool in = false;
  for (size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Point& a = poly[i];
    const Point& b = poly[j];
    if ((a.y() > p.y()) != (b.y() > p.y()) &&
        p.x() < (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x())
      in = !in;
  }
  return in;
}

double polygon_area(const std::vector<Point>& poly) {
  double s = 0;
  for (size_t i = 0; i < poly.size(); ++i) {
    const Point& a = poly[i];
    const Point& b = poly[(i + 1) % poly.size()];
    s += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * s;
}

std::vector<Point> irregular_domain() {
  return {{-1, 0}, {1, 0}, {1, 0.6}, {0.4, 1}, {-0.2, 0.7}, {-0.6, 1}, {-1, 0.5}};
}

Mesh2D make_polygon_mesh(const std::vector<Point>& polygon, double h, unsigned long seed) {
  const size_t nv = polygon.size();
  if (nv < 3) throw GeometryError("polygon needs at least 3 vertices");
  if (!(h > 0)) throw ConfigError("mesh size must be positive");
  for (size_t i = 0; i < nv; ++i)
    for (size_t j = i + 1; j < nv; ++j)
      if (polygon[i] == polygon[j]) throw GeometryError("polygon has a repeated vertex");
  for (size_t i = 0; i < nv; ++i)
    for (size_t j = i + 1; j < nv; ++j) {
      bool adjacent = j == i + 1 || (i == 0 && j == nv - 1);
      if (adjacent) continue;
      if (segments_cross(polygon[i], polygon[(i + 1) % nv], polygon[j], polygon[(j + 1) % nv]))
        throw GeometryError("polygon edges intersect");
    }
  std::vector<Point> poly = polygon;
  if (polygon_area(poly) < 0) std::reverse(poly.begin(), poly.end());
  if (polygon_area(poly) <= 0) throw GeometryError("polygon has zero area");

  Point lo = poly[0], hi = poly[0];
  for (const auto& p : poly) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  Delaunay dt(lo, hi);

  // Boundary points, in order around the polygon.
  std::vector<int> ring;
  for (size_t i = 0; i < nv; ++i) {
    const Point& a = poly[i];
    const Point& b = poly[(i + 1) % nv];
    int m = std::max(1, int(std::ceil((b - a).norm() / h - 1e-9)));
    for (int s = 0; s < m; ++s) ring.push_back(dt.insert(a + (b - a) * (double(s) / m)));
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.05 * h, 0.05 * h);
  const double dy = h * std::sqrt(3.0) / 2;
  int rows = int(std::ceil((hi.y() - lo.y()) / dy)) + 1;
  int cols = int(std::ceil((hi.x() - lo.x()) / h)) + 2;
  for (int j = 0; j < rows; ++j)
    for (int c = 0; c < cols; ++c) {
      int i = j % 2 ? cols - 1 - c : c;  // serpentine order keeps point location local
      Point p(lo.x() + h * (i + 0.5 * (j % 2)) + jitter(rng), lo.y() + dy * j + jitter(rng));
      if (!point_in_polygon(p, poly)) continue;
      double dist = 1e300;
      for (size_t e = 0; e < nv; ++e) dist = std::min(dist, segment_distance(p, poly[e], poly[(e + 1) % nv]));
      if (dist >= 0.6 * h) dt.insert(p);
    }

  // Recover missing boundary edges by splitting them.
  for (int round = 0;; ++round) {
    dt.index_edges();
    std::vector<int> next;
    bool missing = false;
    for (size_t i = 0; i < ring.size(); ++i) {
      int a = ring[i], b = ring[(i + 1) % ring.size()];
      next.push_back(a);
      if (!dt.has_edge(a, b)) {
        missing = true;
        next.push_back(dt.insert(0.5 * (dt.pts()[size_t(a)] + dt.pts()[size_t(b)])));
      }
    }
    ring.swap(next);
    if (!missing) break;
    if (round > 30) throw GeometryError("boundary recovery did not converge");
  }

  std::vector<char> on_ring(dt.pts().size(), 0);
  for (int v : ring) on_ring[size_t(v)] = 1;
  std::vector<int> remap(dt.pts().size(), -1);
  Mesh2D m;
  for (const auto& t : dt.tris()) {
    if (!t.alive) continue;
    if (t.v[0] < Delaunay::kSuper || t.v[1] < Delaunay::kSuper || t.v[2] < Delaunay::kSuper) continue;
    const auto& P = dt.pts();
    Point c = (P[size_t(t.v[0])] + P[size_t(t.v[1])] + P[size_t(t.v[2])]) / 3.0;
    if (!point_in_polygon(c, poly)) continue;
    if (orient(P[size_t(t.v[0])], P[size_t(t.v[1])], P[size_t(t.v[2])]) <= 1e-14 * h * h) continue;
    std::array<int, 3> tri{};
    for (int k = 0; k < 3; ++k) {
      int& r = remap[size_t(t.v[size_t(k)])];
      if (r < 0) {
        r = m.num_vertices();
        m.vertices.push_back(P[size_t(t.v[size_t(k)])]);
        m.marker.push_back(on_ring[size_t(t.v[size_t(k)])] ? BoundaryKind::dirichlet
                                                           : BoundaryKind::interior);
      }
      tri[size_t(k)] = r;
    }
    m.triangles.push_back(tri);
  }
  return m;
}

}  // namespace spalu

#pragma once

#include <array>
#include <vector>

#include "spalu/graph.hpp"

namespace spalu {

enum class BoundaryKind { interior, dirichlet, neumann };

struct Rect {
  double x0 = -1, x1 = 1, y0 = 0, y1 = 1;
};

struct Mesh2D {
  std::vector<Point> vertices;
  std::vector<std::array<int, 3>> triangles;  // counterclockwise
  std::vector<BoundaryKind> marker;

  int num_vertices() const { return int(vertices.size()); }
  double area(int t) const;
  long num_edges() const;
};

/// nx-by-ny grid of vertices over `domain`, every cell cut by its
/// lower-left to upper-right diagonal. Boundary vertices are marked dirichlet.
Mesh2D make_structured_mesh(int nx, int ny, Rect domain = {});

/// Conforming Delaunay triangulation of a simple polygon with edge lengths
/// close to h. Polygon orientation may be either; repeated vertices or
/// crossing edges raise GeometryError. `seed` only jitters interior points.
Mesh2D make_polygon_mesh(const std::vector<Point>& polygon, double h, unsigned long seed = 7);

bool point_in_polygon(const Point& p, const std::vector<Point>& polygon);
double polygon_area(const std::vector<Point>& polygon);

/// Polygonal domain used for the irregular Helmholtz benchmark.
std::vector<Point> irregular_domain();

}  // namespace spalu

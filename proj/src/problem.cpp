#include "spalu/problem.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <random>
#include <sstream>

#include "spalu/matrix_market.hpp"

namespace spalu {

namespace {

double to_number(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("bad value '" + v + "' for " + key);
  }
}

}  // namespace

ProblemDescriptor parse_descriptor(const std::string& text) {
  ProblemDescriptor d;
  auto colon = text.find(':');
  std::string name = text.substr(0, colon);
  std::map<std::string, std::string> kv;
  if (colon != std::string::npos) {
    std::stringstream ss(text.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty()) continue;
      auto eq = item.find('=');
      if (eq == std::string::npos) throw ConfigError("expected key=value in '" + item + "'");
      kv[item.substr(0, eq)] = item.substr(eq + 1);
    }
  }
  auto take = [&](const std::string& key, double fallback) {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    double v = to_number(key, it->second);
    kv.erase(it);
    return v;
  };
  if (name == "laplace-contrast") {
    d.kind = PdeKind::laplace_contrast;
    d.rho = take("rho", 1);
    d.seed = (unsigned long)take("seed", 0);
    d.radius = take("radius", d.radius);
    if (d.rho < 1) throw ConfigError("contrast rho must be >= 1");
    if (!(d.radius > 0)) throw ConfigError("smoothing radius must be positive");
  } else if (name == "helmholtz") {
    d.kind = PdeKind::helmholtz;
    d.k = take("k", d.k);
    if (auto it = kv.find("domain"); it != kv.end()) {
      if (it->second != "polygon" && it->second != "rect")
        throw ConfigError("unknown helmholtz domain '" + it->second + "'");
      d.polygon = it->second == "polygon";
      kv.erase(it);
    }
  } else if (name == "laplace-aniso") {
    d.kind = PdeKind::laplace_aniso;
    d.D << take("d11", 1), take("d12", 1), take("d21", 0), take("d22", 1);
  } else {
    throw ConfigError("unknown problem '" + name + "'");
  }
  if (!kv.empty()) throw ConfigError("unknown parameter '" + kv.begin()->first + "' for " + name);
  return d;
}

std::string ProblemDescriptor::str() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind) {
    case PdeKind::laplace_contrast:
      os << "laplace-contrast:rho=" << rho << ",seed=" << seed;
      if (radius != 0.1) os << ",radius=" << radius;
      break;
    case PdeKind::helmholtz:
      os << "helmholtz:k=" << k;
      if (polygon) os << ",domain=polygon";
      break;
    case PdeKind::laplace_aniso:
      os << "laplace-aniso:d11=" << D(0, 0) << ",d12=" << D(0, 1) << ",d21=" << D(1, 0)
         << ",d22=" << D(1, 1);
      break;
  }
  return os.str();
}

CoefficientField CoefficientField::constant(double a) {
  return scalar([a](const Point&) { return a; });
}

CoefficientField CoefficientField::tensor(const Eigen::Matrix2d& D) {
  CoefficientField f;
  f.D_ = D;
  return f;
}

CoefficientField CoefficientField::scalar(std::function<double(const Point&)> a) {
  CoefficientField f;
  f.a_ = std::move(a);
  return f;
}

CoefficientField make_contrast_field(double rho, unsigned long seed, double radius, Rect box) {
  if (rho < 1) throw ConfigError("contrast rho must be >= 1");
  if (!(radius > 0)) throw ConfigError("smoothing radius must be positive");
  if (rho == 1) return CoefficientField::constant(1.0);

  // White noise on a coarse lattice with one cell of margin.
  const double x0 = box.x0 - radius, y0 = box.y0 - radius;
  const int cx = int(std::ceil((box.x1 - box.x0) / radius)) + 3;
  const int cy = int(std::ceil((box.y1 - box.y0) / radius)) + 3;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0, 1);
  std::vector<double> coarse(size_t(cx) * size_t(cy));
  for (auto& v : coarse) v = unit(rng);

  // Bilinear interpolation onto a grid four times finer, then a 3x3 box blur.
  const int r = 4;
  const double h = radius / r;
  const int fx = (cx - 1) * r + 1, fy = (cy - 1) * r + 1;
  std::vector<double> fine(size_t(fx) * size_t(fy));
  for (int j = 0; j < fy; ++j)
    for (int i = 0; i < fx; ++i) {
      int I = std::min(i / r, cx - 2), J = std::min(j / r, cy - 2);
      double s = double(i - I * r) / r, t = double(j - J * r) / r;
      auto c = [&](int a, int b) { return coarse[size_t(b) * size_t(cx) + size_t(a)]; };
      fine[size_t(j) * size_t(fx) + size_t(i)] = (1 - s) * (1 - t) * c(I, J) + s * (1 - t) * c(I + 1, J) +
                                                 (1 - s) * t * c(I, J + 1) + s * t * c(I + 1, J + 1);
    }
  auto blurred = std::make_shared<std::vector<double>>(fine.size());
  for (int j = 0; j < fy; ++j)
    for (int i = 0; i < fx; ++i) {
      double s = 0;
      int n = 0;
      for (int b = std::max(0, j - 1); b <= std::min(fy - 1, j + 1); ++b)
        for (int a = std::max(0, i - 1); a <= std::min(fx - 1, i + 1); ++a, ++n)
          s += fine[size_t(b) * size_t(fx) + size_t(a)];
      (*blurred)[size_t(j) * size_t(fx) + size_t(i)] = s / n;
    }
  return CoefficientField::scalar([=](const Point& p) {
    int i = std::clamp(int(std::lround((p.x() - x0) / h)), 0, fx - 1);
    int j = std::clamp(int(std::lround((p.y() - y0) / h)), 0, fy - 1);
    return (*blurred)[size_t(j) * size_t(fx) + size_t(i)] > 0.5 ? rho : 1.0 / rho;
  });
}

double dirichlet_value(const ProblemDescriptor& pde, const Point& p) {
  if (pde.kind == PdeKind::helmholtz) return std::exp(p.x() + p.y());
  return p.x() * p.x() + p.y() * p.y() - 1;
}

ProblemInstance assemble_fem(const Mesh2D& mesh, const ProblemDescriptor& pde,
                             const CoefficientField& coeff) {
  const int nv = mesh.num_vertices();
  ProblemInstance out;
  out.mesh = mesh;
  out.descriptor = pde.str();
  out.unknown_of_vertex.assign(size_t(nv), -1);
  int n = 0;
  for (int v = 0; v < nv; ++v)
    if (mesh.marker[size_t(v)] != BoundaryKind::dirichlet) {
      out.unknown_of_vertex[size_t(v)] = n++;
      out.coords.push_back(mesh.vertices[size_t(v)]);
    }
  const auto& U = out.unknown_of_vertex;

  const bool helm = pde.kind == PdeKind::helmholtz;
  const double f = helm ? -1.0 : -4.0;
  const double k2 = pde.k * pde.k;
  std::vector<double> g(size_t(nv), 0.0);
  for (int v = 0; v < nv; ++v)
    if (U[size_t(v)] < 0) g[size_t(v)] = dirichlet_value(pde, mesh.vertices[size_t(v)]);

  Vector<double> b = Vector<double>::Zero(n);
  std::vector<Eigen::Triplet<double, int>> trips;
  trips.reserve(mesh.triangles.size() * 9);
  for (size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Point& p0 = mesh.vertices[size_t(tri[0])];
    const Point& p1 = mesh.vertices[size_t(tri[1])];
    const Point& p2 = mesh.vertices[size_t(tri[2])];
    const double area = 0.5 * ((p1.x() - p0.x()) * (p2.y() - p0.y()) - (p1.y() - p0.y()) * (p2.x() - p0.x()));
    if (!(area > 0)) throw GeometryError("triangle " + std::to_string(t) + " is not counterclockwise");
    const Point* P[3] = {&p0, &p1, &p2};
    Eigen::Vector2d grad[3];
    for (int i = 0; i < 3; ++i) {
      const Point& pj = *P[(i + 1) % 3];
      const Point& pk = *P[(i + 2) % 3];
      grad[i] = Eigen::Vector2d(pj.y() - pk.y(), pk.x() - pj.x()) / (2 * area);
    }
    const Point centroid = (p0 + p1 + p2) / 3.0;
    double Ke[3][3];
    if (coeff.is_scalar()) {
      const double a = coeff.scalar_at(centroid);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) Ke[i][j] = area * a * grad[i].dot(grad[j]);
    } else {
      const Eigen::Matrix2d D = coeff(centroid);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) Ke[i][j] = area * grad[i].dot(D * grad[j]);
    }
    double rhs_sign = 1;
    if (helm) {
      // laplace(u) + k^2 u = f  <=>  (K - k^2 M) u = -F
      rhs_sign = -1;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) Ke[i][j] -= k2 * area / 12.0 * (i == j ? 2.0 : 1.0);
    }
    for (int i = 0; i < 3; ++i) {
      const int ui = U[size_t(tri[size_t(i)])];
      if (ui < 0) continue;
      b(ui) += rhs_sign * f * area / 3.0;
      for (int j = 0; j < 3; ++j) {
        const int uj = U[size_t(tri[size_t(j)])];
        if (uj >= 0)
          trips.emplace_back(ui, uj, Ke[i][j]);
        else
          b(ui) -= Ke[i][j] * g[size_t(tri[size_t(j)])];
      }
    }
  }

  // Neumann flux h = 2 y on boundary edges touching a neumann vertex.
  if (pde.kind == PdeKind::laplace_aniso) {
    std::map<std::pair<int, int>, int> edge_count;
    for (const auto& tri : mesh.triangles)
      for (int k = 0; k < 3; ++k) {
        int a = tri[size_t(k)], c = tri[size_t((k + 1) % 3)];
        ++edge_count[{std::min(a, c), std::max(a, c)}];
      }
    for (const auto& [e, count] : edge_count) {
      if (count != 1) continue;
      auto kind_a = mesh.marker[size_t(e.first)], kind_b = mesh.marker[size_t(e.second)];
      if (kind_a != BoundaryKind::neumann && kind_b != BoundaryKind::neumann) continue;
      const Point& pa = mesh.vertices[size_t(e.first)];
      const Point& pb = mesh.vertices[size_t(e.second)];
      const double len = (pb - pa).norm();
      // exact for the linear flux 2y: int h phi_a = len (2 h_a + h_b) / 6
      const double ha = 2 * pa.y(), hb = 2 * pb.y();
      if (int ua = U[size_t(e.first)]; ua >= 0) b(ua) += len * (2 * ha + hb) / 6;
      if (int ub = U[size_t(e.second)]; ub >= 0) b(ub) += len * (ha + 2 * hb) / 6;
    }
  }

  out.matrix.resize(n, n);
  out.matrix.setFromTriplets(trips.begin(), trips.end());
  out.matrix.makeCompressed();
  out.rhs = std::move(b);
  out.symmetric = coeff.is_scalar() || (coeff(Point(0, 0)) - coeff(Point(0, 0)).transpose()).norm() == 0;
  return out;
}

ProblemInstance make_problem(const ProblemDescriptor& pde, long target) {
  if (target < 1) throw ConfigError("problem size must be positive");
  Mesh2D mesh;
  if (pde.polygon) {
    auto poly = irregular_domain();
    double h = std::sqrt(polygon_area(poly) / (double(target) * std::sqrt(3.0) / 2));
    mesh = make_polygon_mesh(poly, h, pde.seed + 7);
  } else {
    // (nx-2)(ny-2) ~ target on [-1,1]x[0,1] with square cells
    int m = std::max(1, int(std::lround(std::sqrt(double(target) / 2))));
    mesh = make_structured_mesh(2 * m + 3, m + 2);
    if (pde.kind == PdeKind::laplace_aniso) {
      const double top = 1.0;
      for (int v = 0; v < mesh.num_vertices(); ++v) {
        const Point& p = mesh.vertices[size_t(v)];
        if (p.y() == top && p.x() > -1 && p.x() < 1) mesh.marker[size_t(v)] = BoundaryKind::neumann;
      }
    }
  }
  CoefficientField coeff = CoefficientField::constant(1.0);
  if (pde.kind == PdeKind::laplace_contrast) coeff = make_contrast_field(pde.rho, pde.seed, pde.radius);
  if (pde.kind == PdeKind::laplace_aniso) coeff = CoefficientField::tensor(pde.D);
  ProblemInstance inst = assemble_fem(mesh, pde, coeff);
  if (inst.size() == 0) throw GeometryError("mesh for N=" + std::to_string(target) + " has no interior unknowns");
  return inst;
}

ProblemInstance read_matrix_market(const std::string& matrix_path, const std::string& coords_path,
                                   const std::string& rhs_path) {
  ProblemInstance out;
  out.matrix = read_mm_matrix<double>(matrix_path);
  out.matrix.makeCompressed();
  if (out.matrix.rows() != out.matrix.cols())
    throw ParseError(matrix_path, 2, "matrix is not square");
  out.coords = read_coords(coords_path);
  if (Index(out.coords.size()) != out.matrix.rows())
    throw ParseError(coords_path, long(out.coords.size()) + 1,
                     "expected " + std::to_string(out.matrix.rows()) + " coordinate lines, found " +
                         std::to_string(out.coords.size()));
  if (rhs_path.empty()) {
    out.rhs = Vector<double>::Ones(out.matrix.rows());
  } else {
    auto v = read_values(rhs_path);
    if (Index(v.size()) != out.matrix.rows())
      throw ParseError(rhs_path, long(v.size()) + 1, "right-hand side length does not match matrix");
    out.rhs = Eigen::Map<Vector<double>>(v.data(), Index(v.size()));
  }
  SparseMatrix<double> At = out.matrix.transpose();
  out.symmetric = (out.matrix - At).norm() == 0;
  out.descriptor = "matrix-market:" + matrix_path;
  return out;
}

}  // namespace spalu

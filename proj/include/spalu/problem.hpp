#pragma once

#include <functional>
#include <string>
#include <vector>

#include "spalu/core.hpp"
#include "spalu/mesh.hpp"

namespace spalu {

enum class PdeKind { laplace_contrast, helmholtz, laplace_aniso };

/// Parsed problem descriptor, e.g. "helmholtz:k=1.4142135623730951" or
/// "laplace-contrast:rho=100,seed=3".
struct ProblemDescriptor {
  PdeKind kind = PdeKind::laplace_contrast;
  double rho = 1;
  unsigned long seed = 0;
  double radius = 0.1;  // contrast field lattice spacing
  double k = 1.4142135623730951;
  Eigen::Matrix2d D = Eigen::Matrix2d::Identity();
  bool polygon = false;  // helmholtz on irregular_domain()

  std::string str() const;
};

ProblemDescriptor parse_descriptor(const std::string& text);

/// Scalar or tensor coefficient over the domain.
class CoefficientField {
 public:
  static CoefficientField constant(double a);
  static CoefficientField tensor(const Eigen::Matrix2d& D);
  static CoefficientField scalar(std::function<double(const Point&)> a);

  bool is_scalar() const { return bool(a_); }
  double scalar_at(const Point& p) const { return a_(p); }
  Eigen::Matrix2d operator()(const Point& p) const { return a_ ? Eigen::Matrix2d(a_(p) * Eigen::Matrix2d::Identity()) : D_; }

 private:
  std::function<double(const Point&)> a_;
  Eigen::Matrix2d D_ = Eigen::Matrix2d::Identity();
};

/// Smoothed random field thresholded to {rho, 1/rho} over `box`.
CoefficientField make_contrast_field(double rho, unsigned long seed, double smoothing_radius,
                                     Rect box = {});

struct ProblemInstance {
  Mesh2D mesh;
  SparseMatrix<double> matrix;
  Vector<double> rhs;
  std::vector<Point> coords;         // per unknown
  std::vector<int> unknown_of_vertex;  // -1 on dirichlet vertices
  std::string descriptor;
  bool symmetric = false;

  Index size() const { return matrix.rows(); }
};

/// P1 assembly of -div(a grad u) = f (Laplace families) or
/// laplace(u) + k^2 u = f (Helmholtz), with the benchmark boundary data.
/// Dirichlet vertices are eliminated into the right-hand side.
ProblemInstance assemble_fem(const Mesh2D& mesh, const ProblemDescriptor& pde,
                             const CoefficientField& coeff);

/// Mesh + field + assembly for roughly `target_unknowns` unknowns.
ProblemInstance make_problem(const ProblemDescriptor& pde, long target_unknowns);

/// Boundary data g used by the benchmark family.
double dirichlet_value(const ProblemDescriptor& pde, const Point& p);

/// Reads a Matrix Market system plus "x y" coordinate sidecar. The right-hand
/// side is all ones unless `rhs_path` names a file with one value per line.
ProblemInstance read_matrix_market(const std::string& matrix_path, const std::string& coords_path,
                                   const std::string& rhs_path = "");

}  // namespace spalu

#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace cdr {

/// Spatial point. One-dimensional problems use the first component only.
using Point = Eigen::Vector2d;

/// Axis-aligned computational domain [lo, hi] in `dim` dimensions.
struct Box {
  int dim = 1;
  Point lo = Point::Zero();
  Point hi = Point::Ones();

  double width(int i) const { return hi[i] - lo[i]; }
  double measure() const { return dim == 1 ? width(0) : width(0) * width(1); }
  bool contains(const Point& x, double tol = 1e-12) const;
};

inline constexpr double kBoundaryTolerance = 1e-8;

/// Structured simplicial mesh of an interval or a rectangle.
///
/// Nodes are ordered lexicographically by (x2, x1). Elements are segments in 1D
/// and triangles in 2D, each cell split along its lower-left to upper-right
/// diagonal. The mesh is immutable after construction.
struct Mesh {
  int dim = 1;
  Box domain;
  int cells = 0;  // cells per coordinate direction

  Eigen::Matrix<double, Eigen::Dynamic, 2> nodes;
  Eigen::MatrixXi elements;  // n_el x (dim + 1), counter-clockwise in 2D
  std::vector<int> boundary_nodes;
  std::vector<char> on_boundary;  // per node
  Eigen::VectorXd h;              // element diameters

  int num_nodes() const { return static_cast<int>(nodes.rows()); }
  int num_elements() const { return static_cast<int>(elements.rows()); }
  int nodes_per_element() const { return dim + 1; }
  Point node(int i) const { return nodes.row(i).transpose(); }

  /// Element containing `x`, or -1 when `x` lies outside the domain.
  int locate(const Point& x) const;
};

Mesh build_interval_mesh(int n_el, double a, double b);
Mesh build_unit_square_mesh(int n);
Mesh build_rectangle_mesh(int n, const Box& box);

/// Affine geometry of one element: vertex coordinates, measure and the
/// constant gradients of the P1 shape functions (one row per local node).
struct ElementGeometry {
  int n_local = 2;
  Eigen::Matrix<double, 3, 2> vertices = Eigen::Matrix<double, 3, 2>::Zero();
  Eigen::Matrix<double, 3, 2> grads = Eigen::Matrix<double, 3, 2>::Zero();
  double measure = 0.0;
  double diameter = 0.0;

  /// Barycentric coordinates of `x` (P1 shape function values).
  Eigen::Vector3d barycentric(const Point& x) const;
  Point map(const Eigen::Vector3d& bary) const;
  Point centroid() const;
};

ElementGeometry element_geometry(const Mesh& mesh, int e);

struct BasisEval {
  int n_local = 2;
  Eigen::Vector3d values = Eigen::Vector3d::Zero();
  Eigen::Matrix<double, 3, 2> grads = Eigen::Matrix<double, 3, 2>::Zero();
};

/// P1 shape function values and gradients of element `e` at `x`.
/// Throws std::domain_error if `x` is outside the element.
BasisEval p1_basis(const Mesh& mesh, int e, const Point& x);

/// P1 interpolation of a nodal field at `x`.
double interpolate(const Mesh& mesh, const Eigen::VectorXd& field, const Point& x);

/// Writes `<prefix>_nodes.csv` and `<prefix>_elements.csv`.
void export_mesh_csv(const Mesh& mesh, const std::string& prefix);

}  // namespace cdr

#pragma once

#include <Eigen/Dense>

#include <vector>

namespace cdr {

/// Quadrature rule on the reference simplex. Points are barycentric
/// coordinates; weights sum to one and are scaled by the element measure.
struct QuadratureRule {
  std::vector<Eigen::Vector3d> points;
  std::vector<double> weights;
  int size() const { return static_cast<int>(weights.size()); }
};

/// Gauss-Legendre nodes and weights on [0, 1] (Golub-Welsch).
void gauss_legendre_01(int n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights);

/// 2-point Gauss on segments, 3-point (degree 2) rule on triangles.
const QuadratureRule& assembly_rule(int dim);

/// Tensor Gauss rule (collapsed on triangles) with `n` points per direction,
/// repeated over a uniform `subdivisions`-fold refinement of the simplex.
QuadratureRule high_order_rule(int dim, int n, int subdivisions = 1);

}  // namespace cdr

#include "cdr/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace cdr {

void gauss_legendre_01(int n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
  if (n < 1) throw std::invalid_argument("gauss_legendre_01: n must be >= 1");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double beta = k / std::sqrt(4.0 * k * k - 1.0);
    jacobi(k, k - 1) = beta;
    jacobi(k - 1, k) = beta;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  nodes = (eig.eigenvalues().array() + 1.0) * 0.5;
  weights = eig.eigenvectors().row(0).transpose().array().square();
}

const QuadratureRule& assembly_rule(int dim) {
  static const QuadratureRule segment = [] {
    QuadratureRule r;
    const double g = 0.5 / std::sqrt(3.0);
    for (double xi : {0.5 - g, 0.5 + g}) {
      r.points.emplace_back(1.0 - xi, xi, 0.0);
      r.weights.push_back(0.5);
    }
    return r;
  }();
  static const QuadratureRule triangle = [] {
    QuadratureRule r;
    r.points = {Eigen::Vector3d(2.0 / 3, 1.0 / 6, 1.0 / 6), Eigen::Vector3d(1.0 / 6, 2.0 / 3, 1.0 / 6),
                Eigen::Vector3d(1.0 / 6, 1.0 / 6, 2.0 / 3)};
    r.weights = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    return r;
  }();
  if (dim == 1) return segment;
  if (dim == 2) return triangle;
  throw std::invalid_argument("assembly_rule: dim must be 1 or 2");
}

namespace {

QuadratureRule base_rule(int dim, int n) {
  Eigen::VectorXd x, w;
  gauss_legendre_01(n, x, w);
  QuadratureRule r;
  if (dim == 1) {
    for (int i = 0; i < n; ++i) {
      r.points.emplace_back(1.0 - x[i], x[i], 0.0);
      r.weights.push_back(w[i]);
    }
    return r;
  }
  // Duffy map of the unit square onto the reference triangle.
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double s = x[i];
      const double eta = x[j];
      const double l1 = s * (1.0 - eta);
      const double l2 = s * eta;
      r.points.emplace_back(1.0 - l1 - l2, l1, l2);
      r.weights.push_back(2.0 * w[i] * w[j] * s);
    }
  }
  return r;
}

}  // namespace

QuadratureRule high_order_rule(int dim, int n, int subdivisions) {
  if (subdivisions < 1) throw std::invalid_argument("high_order_rule: subdivisions must be >= 1");
  const QuadratureRule base = base_rule(dim, n);
  if (subdivisions == 1) return base;
  const int s = subdivisions;
  QuadratureRule r;
  auto push_sub = [&](const Eigen::Matrix3d& corners, double scale) {
    // corners: columns are barycentric coordinates of the sub-simplex vertices.
    for (int q = 0; q < base.size(); ++q) {
      r.points.push_back(corners * base.points[q]);
      r.weights.push_back(base.weights[q] * scale);
    }
  };
  auto bary = [](double l1, double l2) { return Eigen::Vector3d(1.0 - l1 - l2, l1, l2); };
  if (dim == 1) {
    for (int k = 0; k < s; ++k) {
      Eigen::Matrix3d c = Eigen::Matrix3d::Zero();
      c.col(0) = bary(static_cast<double>(k) / s, 0.0);
      c.col(1) = bary(static_cast<double>(k + 1) / s, 0.0);
      push_sub(c, 1.0 / s);
    }
    return r;
  }
  const double scale = 1.0 / (s * s);
  for (int j = 0; j < s; ++j) {
    for (int i = 0; i + j < s; ++i) {
      Eigen::Matrix3d c;
      c.col(0) = bary(static_cast<double>(i) / s, static_cast<double>(j) / s);
      c.col(1) = bary(static_cast<double>(i + 1) / s, static_cast<double>(j) / s);
      c.col(2) = bary(static_cast<double>(i) / s, static_cast<double>(j + 1) / s);
      push_sub(c, scale);
      if (i + j + 2 <= s) {
        c.col(0) = bary(static_cast<double>(i + 1) / s, static_cast<double>(j) / s);
        c.col(1) = bary(static_cast<double>(i + 1) / s, static_cast<double>(j + 1) / s);
        c.col(2) = bary(static_cast<double>(i) / s, static_cast<double>(j + 1) / s);
        push_sub(c, scale);
      }
    }
  }
  return r;
}

}  // namespace cdr

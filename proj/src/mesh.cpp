#include "cdr/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace cdr {

bool Box::contains(const Point& x, double tol) const {
  for (int i = 0; i < dim; ++i) {
    if (x[i] < lo[i] - tol || x[i] > hi[i] + tol) return false;
  }
  return true;
}

namespace {

void classify_boundary(Mesh& mesh) {
  const int n = mesh.num_nodes();
  mesh.on_boundary.assign(n, 0);
  mesh.boundary_nodes.clear();
  for (int i = 0; i < n; ++i) {
    bool b = false;
    for (int d = 0; d < mesh.dim; ++d) {
      const double x = mesh.nodes(i, d);
      if (std::abs(x - mesh.domain.lo[d]) < kBoundaryTolerance ||
          std::abs(x - mesh.domain.hi[d]) < kBoundaryTolerance) {
        b = true;
      }
    }
    if (b) {
      mesh.on_boundary[i] = 1;
      mesh.boundary_nodes.push_back(i);
    }
  }
}

void compute_diameters(Mesh& mesh) {
  mesh.h.resize(mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    double hmax = 0.0;
    for (int a = 0; a < mesh.nodes_per_element(); ++a) {
      for (int b = a + 1; b < mesh.nodes_per_element(); ++b) {
        const double len =
            (mesh.nodes.row(mesh.elements(e, a)) - mesh.nodes.row(mesh.elements(e, b))).norm();
        hmax = std::max(hmax, len);
      }
    }
    mesh.h[e] = hmax;
  }
}

}  // namespace

Mesh build_interval_mesh(int n_el, double a, double b) {
  if (n_el < 1) throw std::invalid_argument("build_interval_mesh: n_el must be >= 1");
  if (!(a < b)) throw std::invalid_argument("build_interval_mesh: requires a < b");
  Mesh mesh;
  mesh.dim = 1;
  mesh.domain.dim = 1;
  mesh.domain.lo = Point(a, 0.0);
  mesh.domain.hi = Point(b, 0.0);
  mesh.cells = n_el;
  mesh.nodes.setZero(n_el + 1, 2);
  const double dx = (b - a) / n_el;
  for (int i = 0; i <= n_el; ++i) mesh.nodes(i, 0) = (i == n_el) ? b : a + i * dx;
  mesh.elements.resize(n_el, 2);
  for (int e = 0; e < n_el; ++e) {
    mesh.elements(e, 0) = e;
    mesh.elements(e, 1) = e + 1;
  }
  classify_boundary(mesh);
  compute_diameters(mesh);
  return mesh;
}

Mesh build_rectangle_mesh(int n, const Box& box) {
  if (n < 1) throw std::invalid_argument("build_rectangle_mesh: n must be >= 1");
  if (box.dim != 2) throw std::invalid_argument("build_rectangle_mesh: box must be 2D");
  Mesh mesh;
  mesh.dim = 2;
  mesh.domain = box;
  mesh.cells = n;
  const int np = n + 1;
  mesh.nodes.resize(np * np, 2);
  for (int j = 0; j < np; ++j) {
    for (int i = 0; i < np; ++i) {
      const double x = (i == n) ? box.hi[0] : box.lo[0] + box.width(0) * i / n;
      const double y = (j == n) ? box.hi[1] : box.lo[1] + box.width(1) * j / n;
      mesh.nodes(j * np + i, 0) = x;
      mesh.nodes(j * np + i, 1) = y;
    }
  }
  mesh.elements.resize(2 * n * n, 3);
  int e = 0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int p00 = j * np + i;
      const int p10 = p00 + 1;
      const int p01 = p00 + np;
      const int p11 = p01 + 1;
      mesh.elements.row(e++) << p00, p10, p11;
      mesh.elements.row(e++) << p00, p11, p01;
    }
  }
  classify_boundary(mesh);
  compute_diameters(mesh);
  return mesh;
}

Mesh build_unit_square_mesh(int n) {
  if (n < 1) throw std::invalid_argument("build_unit_square_mesh: n must be >= 1");
  Box box;
  box.dim = 2;
  box.lo = Point(0.0, 0.0);
  box.hi = Point(1.0, 1.0);
  return build_rectangle_mesh(n, box);
}

int Mesh::locate(const Point& x) const {
  if (!domain.contains(x, 1e-12)) return -1;
  auto cell_index = [&](int d) {
    const double s = (x[d] - domain.lo[d]) / domain.width(d) * cells;
    return std::clamp(static_cast<int>(std::floor(s)), 0, cells - 1);
  };
  const int i = cell_index(0);
  if (dim == 1) return i;
  const int j = cell_index(1);
  const double fx = (x[0] - domain.lo[0]) / domain.width(0) * cells - i;
  const double fy = (x[1] - domain.lo[1]) / domain.width(1) * cells - j;
  const int base = 2 * (j * cells + i);
  return fx >= fy ? base : base + 1;
}

Eigen::Vector3d ElementGeometry::barycentric(const Point& x) const {
  Eigen::Vector3d lam = Eigen::Vector3d::Zero();
  for (int a = 0; a < n_local; ++a) {
    // Linear shape functions: N_a(x) = N_a(v_0) + grad_a . (x - v_0).
    const double at_v0 = (a == 0) ? 1.0 : 0.0;
    lam[a] = at_v0 + grads.row(a).dot(x - vertices.row(0).transpose());
  }
  return lam;
}

Point ElementGeometry::map(const Eigen::Vector3d& bary) const {
  Point x = Point::Zero();
  for (int a = 0; a < n_local; ++a) x += bary[a] * vertices.row(a).transpose();
  return x;
}

Point ElementGeometry::centroid() const {
  return vertices.topRows(n_local).colwise().mean().transpose();
}

ElementGeometry element_geometry(const Mesh& mesh, int e) {
  ElementGeometry g;
  g.n_local = mesh.nodes_per_element();
  for (int a = 0; a < g.n_local; ++a) g.vertices.row(a) = mesh.nodes.row(mesh.elements(e, a));
  g.diameter = mesh.h[e];
  if (mesh.dim == 1) {
    const double len = g.vertices(1, 0) - g.vertices(0, 0);
    g.measure = len;
    g.grads(0, 0) = -1.0 / len;
    g.grads(1, 0) = 1.0 / len;
    return g;
  }
  const Point v0 = g.vertices.row(0).transpose();
  const Point v1 = g.vertices.row(1).transpose();
  const Point v2 = g.vertices.row(2).transpose();
  Eigen::Matrix2d jac;
  jac.col(0) = v1 - v0;
  jac.col(1) = v2 - v0;
  const double det = jac.determinant();
  g.measure = 0.5 * det;
  // Reference gradients (-1,-1), (1,0), (0,1) mapped by J^{-T}.
  const Eigen::Matrix2d jinv_t = jac.inverse().transpose();
  g.grads.row(0) = (jinv_t * Eigen::Vector2d(-1.0, -1.0)).transpose();
  g.grads.row(1) = (jinv_t * Eigen::Vector2d(1.0, 0.0)).transpose();
  g.grads.row(2) = (jinv_t * Eigen::Vector2d(0.0, 1.0)).transpose();
  return g;
}

BasisEval p1_basis(const Mesh& mesh, int e, const Point& x) {
  if (e < 0 || e >= mesh.num_elements()) throw std::out_of_range("p1_basis: bad element index");
  const ElementGeometry g = element_geometry(mesh, e);
  BasisEval out;
  out.n_local = g.n_local;
  out.values = g.barycentric(x);
  if (out.values.head(g.n_local).minCoeff() < -1e-12) {
    throw std::domain_error("p1_basis: point outside element");
  }
  out.grads = g.grads;
  return out;
}

double interpolate(const Mesh& mesh, const Eigen::VectorXd& field, const Point& x) {
  const int e = mesh.locate(x);
  if (e < 0) throw std::domain_error("interpolate: point outside mesh");
  const ElementGeometry g = element_geometry(mesh, e);
  const Eigen::Vector3d lam = g.barycentric(x);
  double u = 0.0;
  for (int a = 0; a < g.n_local; ++a) u += lam[a] * field[mesh.elements(e, a)];
  return u;
}

void export_mesh_csv(const Mesh& mesh, const std::string& prefix) {
  std::ofstream nodes(prefix + "_nodes.csv");
  if (!nodes) throw std::runtime_error("cannot write " + prefix + "_nodes.csv");
  nodes.precision(17);
  nodes << (mesh.dim == 1 ? "x1\n" : "x1,x2\n");
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    nodes << mesh.nodes(i, 0);
    if (mesh.dim == 2) nodes << ',' << mesh.nodes(i, 1);
    nodes << '\n';
  }
  std::ofstream elems(prefix + "_elements.csv");
  if (!elems) throw std::runtime_error("cannot write " + prefix + "_elements.csv");
  elems << (mesh.dim == 1 ? "n0,n1\n" : "n0,n1,n2\n");
  for (int e = 0; e < mesh.num_elements(); ++e) {
    for (int a = 0; a < mesh.nodes_per_element(); ++a) {
      if (a) elems << ',';
      elems << mesh.elements(e, a);
    }
    elems << '\n';
  }
}

}  // namespace cdr

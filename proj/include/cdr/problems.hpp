#pragma once

#include "cdr/mesh.hpp"

#include <functional>
#include <optional>
#include <string>

namespace cdr {

using ScalarField = std::function<double(double t, const Point& x)>;
using SpatialField = std::function<double(const Point& x)>;

/// Convection field b(t, x, u). Fields flagged solution-dependent must be
/// linear in u, i.e. b(t, x, u) = u * b(t, x, 1).
using ConvectionField = std::function<Point(double t, const Point& x, double u)>;

/// One transient convection-diffusion-reaction benchmark:
///   du/dt - eps Lap(u) + b . grad(u) + c u = f   in the domain,
///   u = u_D on the boundary, u(t0) = u0.
struct ProblemSpec {
  std::string id;
  int dim = 1;
  Box domain;
  double eps = 1.0;
  ConvectionField b;
  bool solution_dependent_b = false;
  SpatialField c;
  ScalarField f;
  SpatialField u0;
  ScalarField u_dirichlet;
  std::optional<ScalarField> exact;
  double Y = 1.0;  // reference solution scale for shock capturing
  double t0 = 0.0;
  double tf = 1.0;
  /// Characteristic layer width, used to keep oracle checks off the layer.
  double layer_width = 0.0;
  /// Signed distance-like quantity to the layer centre (0 on the layer);
  /// absent when the problem has no interior or boundary layer worth skipping.
  std::function<double(double t, const Point& x)> layer_distance;
};

/// Validates the invariants of a ProblemSpec; throws std::invalid_argument.
void validate(const ProblemSpec& p);

/// 1D boundary-layer problem, eps = 1e-4, b = 1 + x(1 - x).
ProblemSpec example1(double eps = 1e-4);
/// 2D hump changing its height, eps = 1e-6, b = (2, 3), c = 1.
ProblemSpec example2();
/// 2D traveling wave, eps = 1e-8, b = (cos pi/3, sin pi/3), c = 1.
ProblemSpec example3();
/// 2D Burgers equation with b = (u, u), eps = 1/Re.
ProblemSpec example4(double reynolds = 1e4);
/// 2D L-shaped interior layer, eps = 1e-8, b = (sqrt2/2, sqrt2/2).
ProblemSpec example5();

/// Smooth diffusion problem with exact solution exp(-t) sin(pi x), eps = 1.
ProblemSpec manufactured_diffusion_1d();

/// Lookup by CLI id ("ex1".."ex5"); `reynolds` only affects ex4.
ProblemSpec problem_by_id(const std::string& id, std::optional<double> reynolds = std::nullopt);

}  // namespace cdr

#include "cdr/problems.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cdr {

namespace {

constexpr double kPi = std::numbers::pi;

Box unit_interval() {
  Box b;
  b.dim = 1;
  b.lo = Point(0.0, 0.0);
  b.hi = Point(1.0, 0.0);
  return b;
}

Box unit_square() {
  Box b;
  b.dim = 2;
  b.lo = Point(0.0, 0.0);
  b.hi = Point(1.0, 1.0);
  return b;
}

ConvectionField constant_convection(Point v) {
  return [v](double, const Point&, double) { return v; };
}

SpatialField constant_field(double c) {
  return [c](const Point&) { return c; };
}

}  // namespace

void validate(const ProblemSpec& p) {
  if (p.dim != 1 && p.dim != 2) throw std::invalid_argument(p.id + ": dim must be 1 or 2");
  if (!(p.eps > 0.0)) throw std::invalid_argument(p.id + ": eps must be positive");
  if (p.Y == 0.0) throw std::invalid_argument(p.id + ": Y must be nonzero");
  if (!(p.tf > p.t0)) throw std::invalid_argument(p.id + ": tf must exceed t0");
  if (!p.b || !p.c || !p.f || !p.u0 || !p.u_dirichlet) {
    throw std::invalid_argument(p.id + ": missing coefficient function");
  }
}

ProblemSpec example1(double eps) {
  ProblemSpec p;
  p.id = "ex1";
  p.dim = 1;
  p.domain = unit_interval();
  p.eps = eps;
  p.b = [](double, const Point& x, double) { return Point(1.0 + x[0] * (1.0 - x[0]), 0.0); };
  p.c = constant_field(0.0);
  const double c1 = std::exp(-1.0 / eps);
  const double c2 = 1.0 - c1;
  auto layer = [eps](double x) { return std::exp((x - 1.0) / eps); };
  p.exact = [=](double t, const Point& x) {
    return std::exp(-t) * (c1 + c2 * x[0] - layer(x[0]));
  };
  p.f = [=](double t, const Point& x) {
    const double xx = x[0];
    const double b = 1.0 + xx * (1.0 - xx);
    const double e = layer(xx);
    return std::exp(-t) * (-c1 - c2 * xx + b * c2 + e * (1.0 + (1.0 - b) / eps));
  };
  p.u0 = [ex = *p.exact](const Point& x) { return ex(0.0, x); };
  p.u_dirichlet = [](double, const Point&) { return 0.0; };
  p.Y = 0.1;
  p.t0 = 0.0;
  p.tf = 1.0;
  p.layer_width = eps;
  p.layer_distance = [](double, const Point& x) { return 1.0 - x[0]; };
  return p;
}

ProblemSpec example2() {
  ProblemSpec p;
  p.id = "ex2";
  p.dim = 2;
  p.domain = unit_square();
  p.eps = 1e-6;
  const Point bvec(2.0, 3.0);
  p.b = constant_convection(bvec);
  p.c = constant_field(1.0);
  const double alpha = 2.0 / std::sqrt(p.eps);
  const double r0sq = 0.25 * 0.25;
  // u = s(t) P(x) A(x), s = 16 sin(pi t), P = x1(1-x1)x2(1-x2),
  // A = 1/2 + atan(alpha q)/pi, q = r0^2 - |x - (0.5, 0.5)|^2.
  p.exact = [=](double t, const Point& x) {
    const double q = r0sq - (x[0] - 0.5) * (x[0] - 0.5) - (x[1] - 0.5) * (x[1] - 0.5);
    const double poly = x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]);
    return 16.0 * std::sin(kPi * t) * poly * (0.5 + std::atan(alpha * q) / kPi);
  };
  const double eps = p.eps;
  p.f = [=](double t, const Point& x) {
    const double s = 16.0 * std::sin(kPi * t);
    const double s_t = 16.0 * kPi * std::cos(kPi * t);
    const double q = r0sq - (x[0] - 0.5) * (x[0] - 0.5) - (x[1] - 0.5) * (x[1] - 0.5);
    const double den = 1.0 + alpha * alpha * q * q;
    const double a = 0.5 + std::atan(alpha * q) / kPi;
    const double p1 = x[0] * (1.0 - x[0]);
    const double p2 = x[1] * (1.0 - x[1]);
    const double poly = p1 * p2;
    double lap = 0.0;
    Point grad;
    for (int i = 0; i < 2; ++i) {
      const double qi = -2.0 * (x[i] - 0.5);
      const double ai = alpha * qi / (kPi * den);
      const double aii = alpha / kPi * (-2.0 / den - 2.0 * alpha * alpha * q * qi * qi / (den * den));
      const double pi = (i == 0) ? (1.0 - 2.0 * x[0]) * p2 : p1 * (1.0 - 2.0 * x[1]);
      const double pii = (i == 0) ? -2.0 * p2 : -2.0 * p1;
      grad[i] = s * (pi * a + poly * ai);
      lap += s * (pii * a + 2.0 * pi * ai + poly * aii);
    }
    const double u = s * poly * a;
    return s_t * poly * a - eps * lap + bvec.dot(grad) + u;
  };
  p.u0 = [ex = *p.exact](const Point& x) { return ex(0.0, x); };
  p.u_dirichlet = [](double, const Point&) { return 0.0; };
  p.Y = 0.7;
  p.t0 = 0.0;
  p.tf = 0.5;
  p.layer_width = std::sqrt(p.eps);
  p.layer_distance = [](double, const Point& x) {
    return std::abs((x - Point(0.5, 0.5)).norm() - 0.25);
  };
  return p;
}

ProblemSpec example3() {
  ProblemSpec p;
  p.id = "ex3";
  p.dim = 2;
  p.domain = unit_square();
  p.eps = 1e-8;
  const Point bvec(std::cos(kPi / 3.0), std::sin(kPi / 3.0));
  p.b = constant_convection(bvec);
  p.c = constant_field(1.0);
  const double delta = 1.0 / std::sqrt(p.eps);
  p.exact = [=](double t, const Point& x) {
    const double env = 0.5 * std::sin(kPi * x[0]) * std::sin(kPi * x[1]);
    return env * (std::tanh((x[0] + x[1] - t - 0.5) * delta) + 1.0);
  };
  const double eps = p.eps;
  p.f = [=](double t, const Point& x) {
    const double env = 0.5 * std::sin(kPi * x[0]) * std::sin(kPi * x[1]);
    const double env1 = 0.5 * kPi * std::cos(kPi * x[0]) * std::sin(kPi * x[1]);
    const double env2 = 0.5 * kPi * std::sin(kPi * x[0]) * std::cos(kPi * x[1]);
    const double th = std::tanh((x[0] + x[1] - t - 0.5) * delta);
    const double sech2 = 1.0 - th * th;
    const double w = th + 1.0;
    const double w1 = delta * sech2;           // dw/dx_i, same for both i
    const double w11 = -2.0 * delta * delta * th * sech2;
    const double u_t = -env * w1;
    const double u_1 = env1 * w + env * w1;
    const double u_2 = env2 * w + env * w1;
    const double env_lap = -2.0 * kPi * kPi * env;
    // Lap(env w) = Lap(env) w + 2 grad(env).grad(w) + env Lap(w).
    const double lap = env_lap * w + 2.0 * (env1 + env2) * w1 + env * 2.0 * w11;
    return u_t - eps * lap + bvec[0] * u_1 + bvec[1] * u_2 + env * w;
  };
  p.u0 = [ex = *p.exact](const Point& x) { return ex(0.0, x); };
  p.u_dirichlet = [](double, const Point&) { return 0.0; };
  p.Y = 0.25;
  p.t0 = 0.0;
  p.tf = 1.0;
  p.layer_width = std::sqrt(p.eps);
  p.layer_distance = [](double t, const Point& x) {
    return std::abs(x[0] + x[1] - t - 0.5) / std::sqrt(2.0);
  };
  return p;
}

ProblemSpec example4(double reynolds) {
  if (!(reynolds > 0.0)) throw std::invalid_argument("example4: Re must be positive");
  ProblemSpec p;
  p.id = "ex4";
  p.dim = 2;
  p.domain = unit_square();
  p.eps = 1.0 / reynolds;
  p.b = [](double, const Point&, double u) { return Point(u, u); };
  p.solution_dependent_b = true;
  p.c = constant_field(0.0);
  p.f = [](double, const Point&) { return 0.0; };
  p.exact = [reynolds](double t, const Point& x) {
    return 1.0 / (1.0 + std::exp((0.5 * reynolds) * ((x[0] + x[1]) - t)));
  };
  p.u0 = [ex = *p.exact](const Point& x) { return ex(0.0, x); };
  p.u_dirichlet = *p.exact;
  p.Y = 0.2;
  p.t0 = 0.0;
  p.tf = 1.0;
  p.layer_width = 2.0 / reynolds;
  p.layer_distance = [](double t, const Point& x) { return std::abs(x[0] + x[1] - t) / std::sqrt(2.0); };
  return p;
}

ProblemSpec example5() {
  ProblemSpec p;
  p.id = "ex5";
  p.dim = 2;
  p.domain = unit_square();
  p.eps = 1e-8;
  p.b = constant_convection(Point(std::sqrt(2.0) / 2.0, std::sqrt(2.0) / 2.0));
  p.c = constant_field(0.0);
  p.f = [](double, const Point&) { return 0.0; };
  p.u0 = [](const Point& x) {
    const bool lower_arm = x[0] >= 0.0 && x[0] <= 0.5 && x[1] >= 0.0 && x[1] <= 0.25;
    const bool left_arm = x[0] >= 0.0 && x[0] <= 0.25 && x[1] >= 0.0 && x[1] <= 0.5;
    return (lower_arm || left_arm) ? 1.0 : 0.0;
  };
  p.u_dirichlet = [](double, const Point& x) {
    const bool bottom = std::abs(x[1]) < kBoundaryTolerance && x[0] >= 0.0 && x[0] <= 0.5;
    const bool left = std::abs(x[0]) < kBoundaryTolerance && x[1] >= 0.0 && x[1] <= 0.5;
    return (bottom || left) ? 1.0 : 0.0;
  };
  p.Y = 0.25;
  p.t0 = 0.0;
  p.tf = 0.25;
  return p;
}

ProblemSpec manufactured_diffusion_1d() {
  ProblemSpec p;
  p.id = "mms1d";
  p.dim = 1;
  p.domain = unit_interval();
  p.eps = 1.0;
  p.b = constant_convection(Point(0.0, 0.0));
  p.c = constant_field(0.0);
  p.exact = [](double t, const Point& x) { return std::exp(-t) * std::sin(kPi * x[0]); };
  p.f = [](double t, const Point& x) {
    return std::exp(-t) * std::sin(kPi * x[0]) * (kPi * kPi - 1.0);
  };
  p.u0 = [](const Point& x) { return std::sin(kPi * x[0]); };
  p.u_dirichlet = [](double, const Point&) { return 0.0; };
  p.Y = 1.0;
  p.t0 = 0.0;
  p.tf = 1.0;
  return p;
}

ProblemSpec problem_by_id(const std::string& id, std::optional<double> reynolds) {
  if (id == "ex1") return example1();
  if (id == "ex2") return example2();
  if (id == "ex3") return example3();
  if (id == "ex4") return example4(reynolds.value_or(1e4));
  if (id == "ex5") return example5();
  if (id == "mms1d") return manufactured_diffusion_1d();
  throw std::invalid_argument("unknown example id '" + id + "' (expected ex1..ex5)");
}

}  // namespace cdr

#include "cdr/quadrature.hpp"

#include <doctest.h>

#include <cmath>

using namespace cdr;

namespace {

// Exact integral of l1^a l2^b l3^c over the reference triangle divided by its area:
// 2 a! b! c! / (a + b + c + 2)!.
double simplex_moment(int a, int b, int c) {
  return 2.0 * std::tgamma(a + 1) * std::tgamma(b + 1) * std::tgamma(c + 1) / std::tgamma(a + b + c + 3);
}

double apply(const QuadratureRule& r, int a, int b, int c) {
  double s = 0.0;
  for (int q = 0; q < r.size(); ++q) {
    const auto& l = r.points[q];
    s += r.weights[q] * std::pow(l[0], a) * std::pow(l[1], b) * std::pow(l[2], c);
  }
  return s;
}

}  // namespace

TEST_CASE("gauss legendre on [0,1] integrates monomials") {
  Eigen::VectorXd x, w;
  gauss_legendre_01(5, x, w);
  CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-14));
  for (int k = 0; k <= 9; ++k) {
    CHECK((w.array() * x.array().pow(k)).sum() == doctest::Approx(1.0 / (k + 1)).epsilon(1e-13));
  }
}

TEST_CASE("assembly rules are exact to their degree") {
  const QuadratureRule& seg = assembly_rule(1);
  CHECK(seg.size() == 2);
  for (int a = 0; a <= 3; ++a) CHECK(apply(seg, a, 0, 0) == doctest::Approx(1.0 / (a + 1)));
  const QuadratureRule& tri = assembly_rule(2);
  CHECK(tri.size() == 3);
  for (int a = 0; a <= 2; ++a) {
    for (int b = 0; a + b <= 2; ++b) CHECK(apply(tri, a, b, 0) == doctest::Approx(simplex_moment(a, b, 0)));
  }
}

TEST_CASE("high order rules integrate higher moments") {
  const QuadratureRule tri = high_order_rule(2, 4, 3);
  for (int a = 0; a <= 5; ++a) {
    for (int b = 0; a + b <= 5; ++b) {
      CHECK(apply(tri, a, b, 5 - a - b) == doctest::Approx(simplex_moment(a, b, 5 - a - b)).epsilon(1e-12));
    }
  }
  const QuadratureRule seg = high_order_rule(1, 8, 4);
  double s = 0.0;
  for (int q = 0; q < seg.size(); ++q) s += seg.weights[q];
  CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(apply(seg, 15, 0, 0) == doctest::Approx(1.0 / 16.0).epsilon(1e-12));
}

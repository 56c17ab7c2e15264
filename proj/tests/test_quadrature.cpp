#include <doctest.h>

#include <cmath>

#include "dgremap/angular.hpp"
#include "dgremap/errors.hpp"
#include "dgremap/quadrature.hpp"

using namespace dgremap;

namespace {

// independent oracle: closed-form monomial integrals
double exact_interval_pm1(int m) { return (m % 2 == 1) ? 0.0 : 2.0 / (m + 1); }
double exact_unit(int m) { return 1.0 / (m + 1); }
double exact_triangle(int m, int n) {
  // int_T x^m y^n = m! n! / (m+n+2)!
  double v = 1.0;
  for (int k = 2; k <= m; ++k) v *= k;
  for (int k = 2; k <= n; ++k) v *= k;
  double denom = 1.0;
  for (int k = 2; k <= m + n + 2; ++k) denom *= k;
  return v / denom;
}

double integrate_1d(const QuadratureRule& rule, int m) {
  double s = 0.0;
  for (int q = 0; q < rule.size(); ++q)
    s += rule.weights(q) * std::pow(rule.points(q, 0), m);
  return s;
}

double integrate_tri(const QuadratureRule& rule, int m, int n) {
  double s = 0.0;
  for (int q = 0; q < rule.size(); ++q)
    s += rule.weights(q) * std::pow(rule.points(q, 0), m) * std::pow(rule.points(q, 1), n);
  return s;
}

}  // namespace

TEST_CASE("gauss_legendre basic rules") {
  const QuadratureRule r1 = gauss_legendre(1);
  CHECK(r1.size() == 1);
  CHECK(r1.points(0, 0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(r1.weights(0) == doctest::Approx(2.0));

  const QuadratureRule r2 = gauss_legendre(2);
  CHECK(r2.points(0, 0) == doctest::Approx(-0.57735026919).epsilon(1e-10));
  CHECK(r2.points(1, 0) == doctest::Approx(0.57735026919).epsilon(1e-10));
  CHECK(r2.weights(0) == doctest::Approx(1.0));
  CHECK(r2.weights(1) == doctest::Approx(1.0));
}

TEST_CASE("gauss_legendre monomial exactness") {
  for (int n = 1; n <= 10; ++n) {
    const QuadratureRule rule = gauss_legendre(n);
    for (int m = 0; m <= rule.exactness; ++m)
      CHECK(integrate_1d(rule, m) == doctest::Approx(exact_interval_pm1(m)).epsilon(1e-12));
  }
  // x^15 with n=8 (odd power integrates to zero by symmetry)
  CHECK(std::abs(integrate_1d(gauss_legendre(8), 15)) < 1e-12);
}

TEST_CASE("gauss_lobatto nodes and weights") {
  const QuadratureRule r2 = gauss_lobatto(2);
  CHECK(r2.points(0, 0) == doctest::Approx(0.0));
  CHECK(r2.points(1, 0) == doctest::Approx(1.0));
  CHECK(r2.weights(0) == doctest::Approx(0.5));
  CHECK(r2.weights(1) == doctest::Approx(0.5));

  const QuadratureRule r3 = gauss_lobatto(3);
  CHECK(r3.points(1, 0) == doctest::Approx(0.5));
  CHECK(r3.weights(0) == doctest::Approx(1.0 / 6.0));
  CHECK(r3.weights(1) == doctest::Approx(4.0 / 6.0));
  CHECK(r3.weights(2) == doctest::Approx(1.0 / 6.0));

  for (int n = 2; n <= 8; ++n) {
    const QuadratureRule rule = gauss_lobatto(n);
    CHECK(rule.weights.sum() == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(rule.weights.minCoeff() > 0.0);
    for (int m = 0; m <= rule.exactness; ++m)
      CHECK(integrate_1d(rule, m) == doctest::Approx(exact_unit(m)).epsilon(1e-12));
  }
}

TEST_CASE("triangle quadrature exactness and positivity") {
  CHECK(triangle_quadrature(1).size() == 1);
  CHECK(triangle_quadrature(1).weights(0) == doctest::Approx(0.5));
  for (int deg = 1; deg <= triangle_quadrature_max_degree(); ++deg) {
    const QuadratureRule rule = triangle_quadrature(deg);
    CHECK(rule.weights.minCoeff() > 0.0);
    CHECK(rule.weights.sum() == doctest::Approx(0.5).epsilon(1e-13));
    for (int m = 0; m <= deg; ++m)
      for (int n = 0; m + n <= deg; ++n)
        CHECK(integrate_tri(rule, m, n) ==
              doctest::Approx(exact_triangle(m, n)).epsilon(1e-12));
  }
  // x^2 y^2 needs degree 4: analytic 2!2!/6! = 1/180
  CHECK(integrate_tri(triangle_quadrature(4), 2, 2) ==
        doctest::Approx(1.0 / 180.0).epsilon(1e-12));
  CHECK_THROWS_AS(triangle_quadrature(7), UnsupportedDegree);
}

TEST_CASE("angular quadrature 1d") {
  const auto angles = gauss_legendre_angles(8);
  CHECK(angles.size() == 8);
  CHECK(angles.weights.sum() == doctest::Approx(1.0).epsilon(1e-13));
  // the P8 directions quoted in the transport runs
  CHECK(angles.directions[4](0) == doctest::Approx(0.1834346424956498).epsilon(1e-10));
  CHECK(angles.directions[5](0) == doctest::Approx(0.5255324099163290).epsilon(1e-10));
  CHECK(angles.directions[7](0) == doctest::Approx(0.9602898564975363).epsilon(1e-10));
  // antisymmetric set
  for (int m = 0; m < 8; ++m) {
    bool found = false;
    for (int k = 0; k < 8; ++k)
      if (std::abs(angles.directions[k](0) + angles.directions[m](0)) < 1e-13 &&
          std::abs(angles.weights(k) - angles.weights(m)) < 1e-13)
        found = true;
    CHECK(found);
  }
}

TEST_CASE("legendre-chebyshev angular quadrature") {
  const auto angles = legendre_chebyshev(8, 8);
  CHECK(angles.size() == 64);
  CHECK(angles.weights.sum() == doctest::Approx(1.0).epsilon(1e-13));
  double zeta_moment = 0.0, eta_moment = 0.0, second = 0.0;
  for (int m = 0; m < angles.size(); ++m) {
    zeta_moment += angles.weights(m) * angles.directions[m](0);
    eta_moment += angles.weights(m) * angles.directions[m](1);
    second += angles.weights(m) * angles.directions[m].squaredNorm();
    CHECK(angles.directions[m].squaredNorm() <= 1.0 + 1e-14);
  }
  CHECK(std::abs(zeta_moment) < 1e-13);
  CHECK(std::abs(eta_moment) < 1e-13);
  // sum w (zeta^2+eta^2) = 1 - <mu^2> = 2/3 exactly for N_l >= 2
  CHECK(second == doctest::Approx(2.0 / 3.0).epsilon(1e-13));
  // antisymmetry: -Omega_m is a node with the same weight
  for (int m = 0; m < angles.size(); ++m) {
    bool found = false;
    for (int k = 0; k < angles.size(); ++k)
      if ((angles.directions[k] + angles.directions[m]).norm() < 1e-12 &&
          std::abs(angles.weights(k) - angles.weights(m)) < 1e-14)
        found = true;
    CHECK(found);
  }
  // ordering m = (i-1) N_c + j
  const auto leg = gauss_legendre(8);
  const double mu0 = leg.points(0, 0);
  const double s0 = std::sqrt(1.0 - mu0 * mu0);
  CHECK(angles.directions[0](0) == doctest::Approx(s0 * std::cos(M_PI / 8)).epsilon(1e-13));
  CHECK(angles.directions[0](1) == doctest::Approx(s0 * std::sin(M_PI / 8)).epsilon(1e-13));
}

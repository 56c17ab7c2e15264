#include <doctest.h>

#include <cmath>

#include "dgremap/basis.hpp"
#include "dgremap/errors.hpp"

using namespace dgremap;

TEST_CASE("1d basis orthonormality and span") {
  for (int r = 1; r <= 4; ++r) {
    const auto& basis = reference_basis<1>(r);
    CHECK(basis.size() == r + 1);
    const QuadratureRule rule = gauss_legendre_unit(r + 2);
    for (int i = 0; i < basis.size(); ++i)
      for (int j = 0; j < basis.size(); ++j) {
        double s = 0.0;
        for (int q = 0; q < rule.size(); ++q) {
          Eigen::Matrix<double, 1, 1> x;
          x(0) = rule.points(q, 0);
          s += rule.weights(q) * basis.value(i, x) * basis.value(j, x);
        }
        CHECK(s == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));
      }
  }
}

TEST_CASE("2d basis orthonormality") {
  for (int r = 1; r <= 3; ++r) {
    const auto& basis = reference_basis<2>(r);
    CHECK(basis.size() == (r + 1) * (r + 2) / 2);
    const QuadratureRule rule = triangle_quadrature(2 * r);
    for (int i = 0; i < basis.size(); ++i)
      for (int j = 0; j < basis.size(); ++j) {
        double s = 0.0;
        for (int q = 0; q < rule.size(); ++q) {
          Eigen::Vector2d x(rule.points(q, 0), rule.points(q, 1));
          s += rule.weights(q) * basis.value(i, x) * basis.value(j, x);
        }
        CHECK(s == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));
      }
  }
}

TEST_CASE("projection onto the basis reproduces polynomials") {
  // project every monomial of degree <= r, evaluate back at scattered points
  const auto& basis = reference_basis<2>(2);
  const QuadratureRule rule = triangle_quadrature(6);
  auto project_eval = [&](auto&& f, const Eigen::Vector2d& at) {
    Eigen::VectorXd coeff = Eigen::VectorXd::Zero(basis.size());
    for (int j = 0; j < basis.size(); ++j)
      for (int q = 0; q < rule.size(); ++q) {
        Eigen::Vector2d x(rule.points(q, 0), rule.points(q, 1));
        coeff(j) += rule.weights(q) * f(x) * basis.value(j, x);
      }
    double v = 0.0;
    for (int j = 0; j < basis.size(); ++j) v += coeff(j) * basis.value(j, at);
    return v;
  };
  const Eigen::Vector2d at(0.31, 0.17);
  auto mono = [](int m, int n) {
    return [m, n](const Eigen::Vector2d& x) {
      return std::pow(x(0), m) * std::pow(x(1), n);
    };
  };
  for (int m = 0; m <= 2; ++m)
    for (int n = 0; m + n <= 2; ++n)
      CHECK(project_eval(mono(m, n), at) ==
            doctest::Approx(std::pow(at(0), m) * std::pow(at(1), n)).epsilon(1e-12));
}

TEST_CASE("basis gradients match finite differences") {
  const auto& basis = reference_basis<2>(2);
  const double h = 1e-6;
  const Eigen::Vector2d x(0.21, 0.33);
  for (int j = 0; j < basis.size(); ++j) {
    const auto g = basis.gradient(j, x);
    for (int d = 0; d < 2; ++d) {
      Eigen::Vector2d xp = x, xm = x;
      xp(d) += h;
      xm(d) -= h;
      const double fd = (basis.value(j, xp) - basis.value(j, xm)) / (2 * h);
      CHECK(g(d) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("pp point sets") {
  SUBCASE("1d") {
    const Eigen::MatrixXd g1 = pp_point_set<1>(1);
    REQUIRE(g1.rows() == 2);
    CHECK(g1(0, 0) == doctest::Approx(0.0));
    CHECK(g1(1, 0) == doctest::Approx(1.0));
    const Eigen::MatrixXd g2 = pp_point_set<1>(2);
    REQUIRE(g2.rows() == 3);
    CHECK(g2(1, 0) == doctest::Approx(0.5));
    CHECK_THROWS_AS(pp_point_set<1>(3), UnsupportedDegree);
  }
  SUBCASE("2d contains the facet flux quadrature points") {
    for (int r = 1; r <= 2; ++r) {
      const Eigen::MatrixXd pts = pp_point_set<2>(r);
      const QuadratureRule gau = gauss_legendre_unit(r + 1);
      const Eigen::Vector2d vertex[3] = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
      for (int f = 0; f < 3; ++f) {
        const Eigen::Vector2d a = vertex[(f + 1) % 3];
        const Eigen::Vector2d b = vertex[(f + 2) % 3];
        for (int q = 0; q < gau.size(); ++q) {
          const Eigen::Vector2d p = a + gau.points(q, 0) * (b - a);
          double dist = 1e300;
          for (int i = 0; i < pts.rows(); ++i)
            dist = std::min(dist, (p - Eigen::Vector2d(pts.row(i))).norm());
          CHECK(dist < 1e-12);
        }
      }
      // all points inside the closed reference triangle
      for (int i = 0; i < pts.rows(); ++i) {
        CHECK(pts(i, 0) >= -1e-14);
        CHECK(pts(i, 1) >= -1e-14);
        CHECK(pts(i, 0) + pts(i, 1) <= 1.0 + 1e-14);
      }
    }
  }
}

TEST_CASE("pp first lobatto weight") {
  CHECK(pp_first_lobatto_weight(1) == doctest::Approx(0.5));
  CHECK(pp_first_lobatto_weight(2) == doctest::Approx(1.0 / 6.0));
}

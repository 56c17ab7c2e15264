#include <doctest.h>

#include <cmath>

#include "dgremap/delaunay.hpp"
#include "dgremap/field.hpp"

using namespace dgremap;

TEST_CASE("projection of constants and linears is exact") {
  auto mesh1 = std::make_shared<const SimplicialMesh<1>>(uniform_interval_mesh(0, 1, 4));
  SUBCASE("constant") {
    auto f = l2_project<1>([](const Eigen::Matrix<double, 1, 1>&) { return 5.0; }, mesh1, 2);
    for (int e = 0; e < 4; ++e) {
      CHECK(f.cell_average(e) == doctest::Approx(5.0).epsilon(1e-14));
      CHECK(std::abs(f.coeffs()(e, 1)) < 1e-14);
      CHECK(std::abs(f.coeffs()(e, 2)) < 1e-14);
    }
    CHECK(f.mass() == doctest::Approx(5.0).epsilon(1e-14));
  }
  SUBCASE("u(x)=x with r=1 on a single element is represented exactly") {
    auto single = std::make_shared<const SimplicialMesh<1>>(uniform_interval_mesh(0, 1, 1));
    auto f =
        l2_project<1>([](const Eigen::Matrix<double, 1, 1>& x) { return x(0); }, single, 1);
    for (double xq : {0.1, 0.43, 0.99}) {
      Eigen::Matrix<double, 1, 1> p;
      p(0) = xq;
      CHECK(f.eval(0, p) == doctest::Approx(xq).epsilon(1e-14));
    }
  }
}

TEST_CASE("projection error of a smooth function converges at order r+1") {
  auto u = [](const Eigen::Matrix<double, 1, 1>& x) {
    const double c = std::cos(M_PI * x(0));
    return c * c + 1e-14;
  };
  double prev = 0.0;
  std::vector<double> errors;
  for (int n : {40, 80, 160}) {
    auto mesh = std::make_shared<const SimplicialMesh<1>>(uniform_interval_mesh(0, 1, n));
    auto f = l2_project<1>(u, mesh, 2);
    // L2-ish error by sampling
    double err = 0.0;
    const int samples = 7;
    for (int e = 0; e < n; ++e)
      for (int s = 0; s < samples; ++s) {
        Eigen::Matrix<double, 1, 1> ref;
        ref(0) = (s + 0.5) / samples;
        const auto x = mesh->affine_map(e).to_physical(ref);
        err += std::abs(f.eval_ref(e, ref) - u(x)) / (n * samples);
      }
    errors.push_back(err);
    prev = err;
  }
  (void)prev;
  const double order1 = std::log2(errors[0] / errors[1]);
  const double order2 = std::log2(errors[1] / errors[2]);
  CHECK(order1 > 2.7);
  CHECK(order2 > 2.7);
}

TEST_CASE("2d projection mean and mass") {
  auto mesh = std::make_shared<const SimplicialMesh<2>>(square_quad4_mesh(3));
  auto f = l2_project<2>([](const Eigen::Vector2d& x) { return 2.0 + x(0) - x(1); }, mesh, 1);
  // mass = integral over the unit square of 2 + x - y = 2
  CHECK(f.mass() == doctest::Approx(2.0).epsilon(1e-13));
  Eigen::Vector2d p(0.37, 0.21);
  CHECK(f.eval_global(p) == doctest::Approx(2.0 + 0.37 - 0.21).epsilon(1e-12));
}

TEST_CASE("field csv round trip") {
  auto mesh = std::make_shared<const SimplicialMesh<1>>(uniform_interval_mesh(0, 1, 3));
  auto f = l2_project<1>(
      [](const Eigen::Matrix<double, 1, 1>& x) { return std::sin(x(0)); }, mesh, 2);
  const std::string csv = f.to_csv();
  const DGField<1> back = DGField<1>::from_csv(mesh, 2, csv);
  CHECK((back.coeffs() - f.coeffs()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.volumes() - f.volumes()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("vertex values average incident elements") {
  auto mesh = std::make_shared<const SimplicialMesh<1>>(uniform_interval_mesh(0, 1, 2));
  DGField<1> f(mesh, 1);
  // element 0 constant 1, element 1 constant 3 -> shared vertex averages to 2
  f.coeffs()(0, 0) = 1.0;
  f.coeffs()(1, 0) = 3.0;
  const Eigen::VectorXd v = vertex_values(f);
  CHECK(v(0) == doctest::Approx(1.0));
  CHECK(v(1) == doctest::Approx(2.0));
  CHECK(v(2) == doctest::Approx(3.0));
}

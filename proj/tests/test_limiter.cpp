#include <doctest.h>

#include "dgremap/common.hpp"
#include "dgremap/delaunay.hpp"
#include "dgremap/limiter.hpp"

using namespace dgremap;

namespace {

DGField<1> cell_with(double avg, double slope_coeff, double curv_coeff = 0.0) {
  auto mesh = std::make_shared<const SimplicialMesh<1>>(uniform_interval_mesh(0, 1, 1));
  DGField<1> f(mesh, 2);
  f.coeffs()(0, 0) = avg;  // phi0 = 1 in 1D
  f.coeffs()(0, 1) = slope_coeff;
  f.coeffs()(0, 2) = curv_coeff;
  return f;
}

}  // namespace

TEST_CASE("limiter leaves nonnegative cells alone") {
  DGField<1> f = cell_with(2.0, 0.1, 0.05);
  REQUIRE(f.min_at_pp_points() >= 0.0);
  const auto before = f.coeffs();
  const LimiterReport rep = pp_limit(f);
  CHECK(rep.limited_cells == 0);
  CHECK((f.coeffs() - before).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("limiter lambda formula on the reference case") {
  // ubar = 1, minimum point value -1 -> lambda = 1/2, the minimum maps to 0
  // basis phi1 = sqrt(3)(2x-1): value at x=0 is -sqrt(3); choose c1 so the
  // minimum at x=0 equals -1: c1 = 2/sqrt(3)
  DGField<1> f = cell_with(1.0, 2.0 / std::sqrt(3.0));
  REQUIRE(f.element_min_at_pp_points(0) == doctest::Approx(-1.0).epsilon(1e-14));
  const double c1 = f.coeffs()(0, 1);
  const LimiterReport rep = pp_limit(f);
  CHECK(rep.limited_cells == 1);
  CHECK(f.coeffs()(0, 1) / c1 == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(f.cell_average(0) == doctest::Approx(1.0));
  CHECK(f.element_min_at_pp_points(0) >= 0.0);
  CHECK(f.element_min_at_pp_points(0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("zero average with negative values flattens the cell") {
  DGField<1> f = cell_with(0.0, 0.3);
  const LimiterReport rep = pp_limit(f);
  CHECK(rep.limited_cells == 1);
  CHECK(f.coeffs()(0, 1) == 0.0);
  CHECK(f.cell_average(0) == 0.0);
}

TEST_CASE("negative average policies") {
  DGField<1> f = cell_with(-1.0, 0.0);
  CHECK_THROWS_AS(pp_limit(f), NegativeCellAverage);
  DGField<1> g = cell_with(-1e-15, 0.2);
  const LimiterReport rep = pp_limit(g, NegativeAveragePolicy::FlattenAndCount);
  CHECK(rep.negative_average_cells == 1);
  CHECK(g.coeffs().row(0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("limiter properties on random fields") {
  // average preservation, idempotence, nonnegativity at the point set
  for (int dcase = 0; dcase < 2; ++dcase) {
    Rng rng(7 + dcase);
    if (dcase == 0) {
      auto mesh =
          std::make_shared<const SimplicialMesh<1>>(uniform_interval_mesh(0, 1, 600));
      DGField<1> f(mesh, 2);
      for (int e = 0; e < 600; ++e) {
        f.coeffs()(e, 0) = rng.uniform(0.0, 2.0);
        f.coeffs()(e, 1) = rng.uniform(-1.5, 1.5);
        f.coeffs()(e, 2) = rng.uniform(-1.5, 1.5);
      }
      const Eigen::VectorXd averages_before =
          f.coeffs().col(0);
      pp_limit(f);
      CHECK((Eigen::VectorXd(f.coeffs().col(0)) - averages_before).cwiseAbs().maxCoeff() ==
            0.0);
      CHECK(f.min_at_pp_points() >= 0.0);
      const auto limited = f.coeffs();
      const LimiterReport second = pp_limit(f);
      CHECK(second.limited_cells == 0);
      CHECK((f.coeffs() - limited).cwiseAbs().maxCoeff() == 0.0);
    } else {
      auto mesh = std::make_shared<const SimplicialMesh<2>>(square_quad4_mesh(12));
      DGField<2> f(mesh, 2);
      for (int e = 0; e < f.coeffs().rows(); ++e) {
        f.coeffs()(e, 0) = rng.uniform(0.0, 2.0);
        for (int j = 1; j < 6; ++j) f.coeffs()(e, j) = rng.uniform(-1.0, 1.0);
      }
      const Eigen::VectorXd averages_before = f.coeffs().col(0);
      pp_limit(f);
      CHECK((Eigen::VectorXd(f.coeffs().col(0)) - averages_before).cwiseAbs().maxCoeff() ==
            0.0);
      CHECK(f.min_at_pp_points() >= 0.0);
      const auto limited = f.coeffs();
      pp_limit(f);
      CHECK((f.coeffs() - limited).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

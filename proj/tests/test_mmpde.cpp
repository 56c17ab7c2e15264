#include <doctest.h>

#include <cmath>

#include "dgremap/common.hpp"
#include "dgremap/delaunay.hpp"
#include "dgremap/mmpde.hpp"

using namespace dgremap;

namespace {

// independent oracle: the mesh energy written out directly from its
// published form, no shared code with the library path
template <int D>
double energy_oracle(const SimplicialMesh<D>& physical, const MetricField<D>& metric,
                     const std::vector<Eigen::Matrix<double, D, 1>>& xi) {
  double total = 0.0;
  const double p = 0.75 * D;
  for (int e = 0; e < physical.n_elements(); ++e) {
    const auto& el = physical.topology().elements[e];
    Eigen::Matrix<double, D, D> ek, ekc;
    for (int k = 0; k < D; ++k) {
      ek.col(k) = physical.vertex(el[k + 1]) - physical.vertex(el[0]);
      ekc.col(k) = xi[el[k + 1]] - xi[el[0]];
    }
    const Eigen::Matrix<double, D, D> fprime = ek * ekc.inverse();
    const Eigen::Matrix<double, D, D> m = metric.tensors[e];
    const Eigen::Matrix<double, D, D> finv = fprime.inverse();
    const double detm = m.determinant();
    const double vol = physical.volume(e);
    const double term1 =
        vol * std::sqrt(detm) *
        std::pow((finv * m.inverse() * finv.transpose()).trace(), p);
    const double term2 =
        vol * std::sqrt(detm) * std::pow(static_cast<double>(D), p) *
        std::pow(fprime.determinant() * std::sqrt(detm), -1.5);
    total += (term1 + term2) / 3.0;
  }
  return total;
}

template <int D>
MetricField<D> random_spd_metric(const SimplicialMesh<D>& mesh, Rng& rng) {
  MetricField<D> metric;
  metric.tensors.resize(mesh.n_elements());
  for (auto& m : metric.tensors) {
    if constexpr (D == 1) {
      m(0, 0) = rng.uniform(0.5, 5.0);
    } else {
      const double angle = rng.uniform(0.0, M_PI);
      const double l1 = rng.uniform(0.5, 5.0), l2 = rng.uniform(0.5, 5.0);
      Eigen::Matrix2d q;
      q << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
      m = q * Eigen::Vector2d(l1, l2).asDiagonal() * q.transpose();
    }
  }
  return metric;
}

}  // namespace

TEST_CASE("hessian recovery reproduces quadratics") {
  SUBCASE("1d") {
    auto mesh = uniform_interval_mesh(0, 1, 17);
    Eigen::VectorXd quad(mesh.n_vertices()), lin(mesh.n_vertices());
    for (int i = 0; i < mesh.n_vertices(); ++i) {
      const double x = mesh.vertex(i)(0);
      quad(i) = x * x;
      lin(i) = 3.0 * x - 1.0;
    }
    const auto h = hessian_recovery<1>(mesh, quad);
    for (const auto& hk : h) CHECK(hk(0, 0) == doctest::Approx(2.0).epsilon(1e-10));
    const auto hl = hessian_recovery<1>(mesh, lin);
    for (const auto& hk : hl) CHECK(std::abs(hk(0, 0)) < 1e-10);
  }
  SUBCASE("2d cross term") {
    Rng rng(5);
    const auto mesh = perturbed_delaunay_square(6, 0.2, rng);
    Eigen::VectorXd values(mesh.n_vertices());
    for (int i = 0; i < mesh.n_vertices(); ++i)
      values(i) = mesh.vertex(i)(0) * mesh.vertex(i)(1);
    const auto h = hessian_recovery<2>(mesh, values);
    for (const auto& hk : h) {
      CHECK(hk(0, 1) == doctest::Approx(1.0).epsilon(1e-8));
      CHECK(std::abs(hk(0, 0)) < 1e-8);
      CHECK(std::abs(hk(1, 1)) < 1e-8);
    }
  }
}

TEST_CASE("metric from hessian") {
  SUBCASE("zero hessian gives the identity") {
    Eigen::Matrix2d h = Eigen::Matrix2d::Zero();
    CHECK((metric_from_hessian<2>(h) - Eigen::Matrix2d::Identity()).norm() < 1e-14);
  }
  SUBCASE("1d closed form (1+|h|)^{4/5}") {
    Eigen::Matrix<double, 1, 1> h;
    h(0, 0) = -3.0;
    const auto m = metric_from_hessian<1>(h);
    CHECK(m(0, 0) == doctest::Approx(std::pow(4.0, 0.8)).epsilon(1e-13));
  }
  SUBCASE("2d diagonal case") {
    Eigen::Matrix2d h = Eigen::Vector2d(3.0, 0.0).asDiagonal();
    const auto m = metric_from_hessian<2>(h);
    const double scale = std::pow(4.0, -1.0 / 6.0);
    CHECK(m(0, 0) == doctest::Approx(scale * 4.0).epsilon(1e-13));
    CHECK(m(1, 1) == doctest::Approx(scale * 1.0).epsilon(1e-13));
    CHECK(std::abs(m(0, 1)) < 1e-14);
  }
}

TEST_CASE("metric intersection") {
  SUBCASE("idempotence") {
    Eigen::Matrix2d m;
    m << 3.0, 0.5, 0.5, 1.5;
    CHECK((metric_pair_intersection<2>(m, m) - m).norm() < 1e-12);
  }
  SUBCASE("commuting diagonal pair") {
    const Eigen::Matrix2d a = Eigen::Vector2d(4.0, 1.0).asDiagonal();
    const Eigen::Matrix2d b = Eigen::Vector2d(1.0, 4.0).asDiagonal();
    const auto m = metric_pair_intersection<2>(a, b);
    CHECK(m(0, 0) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(m(1, 1) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(std::abs(m(0, 1)) < 1e-12);
  }
  SUBCASE("upper bound in the Loewner order") {
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
      auto rand_spd = [&rng]() {
        const double angle = rng.uniform(0.0, M_PI);
        Eigen::Matrix2d q;
        q << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
        return Eigen::Matrix2d(
            q * Eigen::Vector2d(rng.uniform(0.2, 4.0), rng.uniform(0.2, 4.0)).asDiagonal() *
            q.transpose());
      };
      const Eigen::Matrix2d a = rand_spd(), b = rand_spd();
      const Eigen::Matrix2d m = metric_pair_intersection<2>(a, b);
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> ea(m - a), eb(m - b);
      CHECK(ea.eigenvalues().minCoeff() > -1e-10);
      CHECK(eb.eigenvalues().minCoeff() > -1e-10);
    }
  }
  SUBCASE("single field unchanged") {
    auto mesh = std::make_shared<const SimplicialMesh<1>>(uniform_interval_mesh(0, 1, 4));
    Rng rng(2);
    const auto metric = random_spd_metric<1>(*mesh, rng);
    const auto folded = metric_intersection<1>({metric});
    for (int e = 0; e < 4; ++e)
      CHECK(folded.tensors[e](0, 0) == metric.tensors[e](0, 0));
  }
}

TEST_CASE("mesh energy matches the oracle") {
  SUBCASE("1d uniform with identity metric") {
    auto mesh = std::make_shared<const SimplicialMesh<1>>(uniform_interval_mesh(0, 1, 8));
    const auto metric = MetricField<1>::identity(8);
    MeshEnergyContext<1> ctx(mesh, metric, 0.01);
    const auto xi = mesh->vertices();
    const double lib = ctx.energy(xi).total();
    const double oracle = energy_oracle<1>(*mesh, metric, xi);
    CHECK(lib == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(std::isfinite(lib));
  }
  SUBCASE("random meshes, metrics, and metric scaling") {
    Rng rng(17);
    auto mesh = std::make_shared<const SimplicialMesh<2>>(perturbed_delaunay_square(3, 0.25, rng));
    auto metric = random_spd_metric<2>(*mesh, rng);
    MeshEnergyContext<2> ctx(mesh, metric, 0.01);
    std::vector<Eigen::Vector2d> xi = mesh->vertices();
    for (auto& p : xi) {
      if (p(0) > 0.01 && p(0) < 0.99 && p(1) > 0.01 && p(1) < 0.99) {
        p(0) += 0.01 * rng.uniform(-1.0, 1.0);
        p(1) += 0.01 * rng.uniform(-1.0, 1.0);
      }
    }
    CHECK(ctx.energy(xi).total() ==
          doctest::Approx(energy_oracle<2>(*mesh, metric, xi)).epsilon(1e-11));
    // scaling the metric rescales the energy consistently with the oracle
    MetricField<2> scaled = metric;
    for (auto& m : scaled.tensors) m *= 2.0;
    MeshEnergyContext<2> ctx2(mesh, scaled, 0.01);
    CHECK(ctx2.energy(xi).total() ==
          doctest::Approx(energy_oracle<2>(*mesh, scaled, xi)).epsilon(1e-11));
  }
}

TEST_CASE("analytic velocities match finite differences of the energy") {
  const double fd_step = 1e-6;
  SUBCASE("1d") {
    Rng rng(23);
    for (int trial = 0; trial < 6; ++trial) {
      const int n = 4 + rng.below(6);
      std::vector<Eigen::Matrix<double, 1, 1>> verts(n + 1);
      verts[0](0) = 0.0;
      verts[n](0) = 1.0;
      for (int i = 1; i < n; ++i)
        verts[i](0) = (i + 0.3 * rng.uniform(-1.0, 1.0)) / n;
      std::vector<MeshTopology<1>::Element> els;
      for (int e = 0; e < n; ++e) els.push_back({e, e + 1});
      std::vector<BoundaryMarker> markers(n + 1, BoundaryMarker::Interior);
      markers.front() = markers.back() = BoundaryMarker::Corner;
      auto mesh = std::make_shared<const SimplicialMesh<1>>(
          SimplicialMesh<1>::create(verts, els, markers));
      const auto metric = random_spd_metric<1>(*mesh, rng);
      MeshEnergyContext<1> ctx(mesh, metric, 0.01);
      // perturbed computational mesh
      std::vector<Eigen::Matrix<double, 1, 1>> xi = mesh->vertices();
      for (int i = 1; i < n; ++i) xi[i](0) += 0.1 / n * rng.uniform(-1.0, 1.0);
      const auto grad = ctx.assembled_gradient(xi);
      double gmax = 0.0;
      for (const auto& g : grad) gmax = std::max(gmax, g.norm());
      for (int i = 1; i < n; ++i) {
        auto xp = xi, xm = xi;
        xp[i](0) += fd_step;
        xm[i](0) -= fd_step;
        const double fd = -(ctx.energy(xp).total() - ctx.energy(xm).total()) / (2 * fd_step);
        CHECK(std::abs(grad[i](0) - fd) <= 1e-6 * std::max(gmax, 1e-12));
      }
    }
  }
  SUBCASE("2d") {
    Rng rng(29);
    for (int trial = 0; trial < 4; ++trial) {
      auto mesh = std::make_shared<const SimplicialMesh<2>>(
          perturbed_delaunay_square(2 + trial % 2, 0.2, rng));
      const auto metric = random_spd_metric<2>(*mesh, rng);
      MeshEnergyContext<2> ctx(mesh, metric, 0.01);
      std::vector<Eigen::Vector2d> xi = mesh->vertices();
      for (int i = 0; i < mesh->n_vertices(); ++i)
        if (mesh->marker(i) == BoundaryMarker::Interior) {
          xi[i](0) += 0.02 * rng.uniform(-1.0, 1.0);
          xi[i](1) += 0.02 * rng.uniform(-1.0, 1.0);
        }
      const auto grad = ctx.assembled_gradient(xi);
      double gmax = 0.0;
      for (const auto& g : grad) gmax = std::max(gmax, g.norm());
      for (int i = 0; i < mesh->n_vertices(); ++i) {
        if (mesh->marker(i) != BoundaryMarker::Interior) continue;
        for (int d = 0; d < 2; ++d) {
          auto xp = xi, xm = xi;
          xp[i](d) += fd_step;
          xm[i](d) -= fd_step;
          const double fd =
              -(ctx.energy(xp).total() - ctx.energy(xm).total()) / (2 * fd_step);
          CHECK(std::abs(grad[i](d) - fd) <= 1e-6 * std::max(gmax, 1e-12));
        }
      }
    }
  }
}

TEST_CASE("local velocities sum to zero and scale with tau") {
  Rng rng(31);
  auto mesh = std::make_shared<const SimplicialMesh<2>>(perturbed_delaunay_square(3, 0.2, rng));
  const auto metric = random_spd_metric<2>(*mesh, rng);
  MeshEnergyContext<2> ctx(mesh, metric, 0.01);
  MeshEnergyContext<2> ctx2(mesh, metric, 0.02);
  const auto xi = mesh->vertices();
  for (int e = 0; e < mesh->n_elements(); ++e) {
    const auto v = ctx.local_velocities(xi, e);
    CHECK((v[0] + v[1] + v[2]).norm() < 1e-12 * (v[1].norm() + v[2].norm() + 1e-30));
  }
  const auto rhs1 = ctx.ode_rhs(xi, *mesh);
  const auto rhs2 = ctx2.ode_rhs(xi, *mesh);
  for (int i = 0; i < mesh->n_vertices(); ++i)
    CHECK((rhs1[i] - 2.0 * rhs2[i]).norm() <= 1e-12 * std::max(1.0, rhs1[i].norm()));
}

TEST_CASE("uniform mesh with identity metric is stationary") {
  auto mesh = std::make_shared<const SimplicialMesh<1>>(uniform_interval_mesh(0, 1, 10));
  MeshEnergyContext<1> ctx(mesh, MetricField<1>::identity(10), 0.01);
  const auto rhs = ctx.ode_rhs(mesh->vertices(), *mesh);
  for (const auto& v : rhs) CHECK(std::abs(v(0)) < 1e-10);

  MmpdeOptions options;
  options.sweeps = 1;
  MetricProvider<1> provider = [](const SimplicialMesh<1>& m) {
    return MetricField<1>::identity(m.n_elements());
  };
  auto moved = move_mesh<1>(mesh, mesh, provider, options);
  for (int i = 0; i < mesh->n_vertices(); ++i)
    CHECK(std::abs(moved->vertex(i)(0) - mesh->vertex(i)(0)) < 1e-6);
}

TEST_CASE("mesh movement concentrates elements and keeps the mesh valid") {
  auto mesh = std::make_shared<const SimplicialMesh<1>>(uniform_interval_mesh(0, 1, 40));
  MetricProvider<1> provider = [](const SimplicialMesh<1>& m) {
    Eigen::VectorXd values(m.n_vertices());
    for (int i = 0; i < m.n_vertices(); ++i) {
      const double c = std::cos(M_PI * m.vertex(i)(0));
      values(i) = c * c + 1e-14;
    }
    return metric_from_nodal_values<1>(m, values);
  };
  MmpdeOptions options;
  MmpdeDiagnostics diag;
  auto moved = move_mesh<1>(mesh, mesh, provider, options, &diag);
  CHECK(moved->n_elements() == 40);
  REQUIRE(diag.sweeps.size() == 5);
  for (const auto& sweep : diag.sweeps) CHECK(sweep.energy_end <= sweep.energy_start + 1e-12);
  // equidistribution improves from the first to the last sweep
  const auto m0 = provider(*mesh);
  const auto m5 = provider(*moved);
  CHECK(equidistribution_spread(*moved, m5) < equidistribution_spread(*mesh, m0));
  // elements concentrate where |u''| is large (x = 0.5 has the largest |u''|
  // among the stationary points of cos^2)
  double h_mid = 0.0, h_edge = 0.0;
  for (int e = 0; e < 40; ++e) {
    const double c = moved->centroid(e)(0);
    if (std::abs(c - 0.5) < 0.1) h_mid = std::max(h_mid, moved->volume(e));
    if (c < 0.1) h_edge = std::max(h_edge, moved->volume(e));
  }
  CHECK(h_mid < h_edge);
  // corners immobile exactly
  CHECK(moved->vertex(0)(0) == 0.0);
  CHECK(moved->vertex(40)(0) == 1.0);
}

TEST_CASE("2d mesh movement keeps boundary vertices on the boundary") {
  Rng rng(3);
  auto mesh = std::make_shared<const SimplicialMesh<2>>(square_quad4_mesh(6));
  MetricProvider<2> provider = [](const SimplicialMesh<2>& m) {
    Eigen::VectorXd values(m.n_vertices());
    for (int i = 0; i < m.n_vertices(); ++i) {
      const double r2 = (m.vertex(i)(0) - 0.5) * (m.vertex(i)(0) - 0.5) +
                        (m.vertex(i)(1) - 0.5) * (m.vertex(i)(1) - 0.5);
      values(i) = 1.0 - std::tanh(50.0 * (r2 - 1.0 / 16.0)) + 1e-14;
    }
    return metric_from_nodal_values<2>(m, values);
  };
  MmpdeOptions options;
  options.sweeps = 3;
  auto moved = move_mesh<2>(mesh, mesh, provider, options);
  for (int i = 0; i < mesh->n_vertices(); ++i) {
    if (mesh->marker(i) == BoundaryMarker::Corner) {
      CHECK((moved->vertex(i) - mesh->vertex(i)).norm() == 0.0);
    } else if (mesh->marker(i) == BoundaryMarker::Boundary) {
      const auto& x = moved->vertex(i);
      const double dist = std::min(std::min(std::abs(x(0)), std::abs(1.0 - x(0))),
                                   std::min(std::abs(x(1)), std::abs(1.0 - x(1))));
      CHECK(dist < 1e-12);
    }
  }
  // movement happened at all
  double total = 0.0;
  for (int i = 0; i < mesh->n_vertices(); ++i)
    total += (moved->vertex(i) - mesh->vertex(i)).norm();
  CHECK(total > 1e-3);
}

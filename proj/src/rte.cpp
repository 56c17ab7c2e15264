#include "dgremap/rte.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "dgremap/common.hpp"

namespace dgremap {

namespace {

using LocalMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 6, 6>;
using LocalVec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 6, 1>;

template <int D>
struct RteRefTables {
  QuadratureRule vol_rule;
  Eigen::MatrixXd vol_phi;                      // nq x n_b
  std::array<Eigen::MatrixXd, D> convection;    // C_l(i,j) = sum_q w g_l(q,i) phi_j(q)
  QuadratureRule facet_rule;                    // unit interval rule (2D only)
  int n_b = 0;

  explicit RteRefTables(int r) {
    const auto& basis = reference_basis<D>(r);
    n_b = basis.size();
    if constexpr (D == 1)
      vol_rule = gauss_legendre_unit(r + 2);
    else
      vol_rule = triangle_quadrature(2 * r + 2);
    vol_phi = basis.tabulate(vol_rule.points);
    for (int l = 0; l < D; ++l) {
      const Eigen::MatrixXd grad = basis.tabulate_gradient(vol_rule.points, l);
      Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n_b, n_b);
      for (int q = 0; q < vol_rule.size(); ++q)
        for (int i = 0; i < n_b; ++i)
          for (int j = 0; j < n_b; ++j)
            c(i, j) += vol_rule.weights(q) * grad(q, i) * vol_phi(q, j);
      convection[l] = c;
    }
    facet_rule = (D == 1) ? QuadratureRule{} : gauss_legendre_unit(r + 1);
  }
};

template <int D>
const RteRefTables<D>& rte_tables(int r) {
  static std::map<int, RteRefTables<D>> cache;
  auto it = cache.find(r);
  if (it == cache.end()) it = cache.emplace(r, RteRefTables<D>(r)).first;
  return it->second;
}

constexpr double kGrazing = 1e-14;

}  // namespace

template <int D>
void RteConfig<D>::validate() const {
  std::vector<std::string> problems;
  if (angles.size() < 1) problems.push_back("angular quadrature is empty");
  if (!(dt > 0.0)) problems.push_back("dt must be positive");
  if (!(final_time > 0.0)) problems.push_back("final time must be positive");
  if (!(c > 0.0)) problems.push_back("photon speed must be positive");
  if (degree < 1) problems.push_back("degree must be >= 1");
  if (pp_limiter && degree > 2) problems.push_back("positivity limiter supports r = 1, 2");
  if (!(si_tolerance > 0.0)) problems.push_back("source-iteration tolerance must be positive");
  if (si_max_iterations < 1) problems.push_back("si_max_iterations must be >= 1");
  if (sigma_s.constant && *sigma_s.constant < 0.0)
    problems.push_back("sigma_s must be nonnegative");
  if (sigma_t.constant && !(*sigma_t.constant + 1.0 / (c * dt) > 0.0))
    problems.push_back("sigma_t + 1/(c dt) must be positive");
  if (!problems.empty()) throw ValidationError(problems);
}

template <int D>
DGField<D> RadiativeState<D>::scalar_flux(const AngularQuadrature<D>& angles) const {
  if (static_cast<int>(intensities.size()) != angles.size())
    throw ValidationError("state and angular quadrature sizes differ");
  DGField<D> flux(intensities.front().mesh_ptr(), intensities.front().degree());
  for (int m = 0; m < angles.size(); ++m)
    flux.coeffs() += angles.weights(m) * intensities[m].coeffs();
  return flux;
}

template <int D>
double RadiativeState<D>::min_at_pp_points() const {
  double vmin = std::numeric_limits<double>::infinity();
  for (const auto& field : intensities) vmin = std::min(vmin, field.min_at_pp_points());
  return vmin;
}

template <int D>
RadiativeState<D> initial_state(const RteConfig<D>& config,
                                std::shared_ptr<const SimplicialMesh<D>> mesh) {
  config.validate();
  RadiativeState<D> state;
  state.time = 0.0;
  state.intensities.reserve(config.angles.size());
  for (int m = 0; m < config.angles.size(); ++m) {
    const auto dir = config.angles.directions[m];
    auto f = [&config, dir](const Eigen::Matrix<double, D, 1>& x) {
      return config.initial ? config.initial(x, dir) : 0.0;
    };
    state.intensities.push_back(l2_project<D>(f, mesh, config.degree));
    if (config.pp_limiter)
      pp_limit(state.intensities.back(), NegativeAveragePolicy::FlattenAndCount);
  }
  return state;
}

template <int D>
EffectiveCoeffs<D> effective_coeffs(const RteConfig<D>& config,
                                    const RadiativeState<D>& previous) {
  EffectiveCoeffs<D> eff;
  eff.shift = 1.0 / (config.c * config.dt);
  const double shift = eff.shift;
  const auto sigma_t = config.sigma_t;
  eff.sigma_tilde = [sigma_t, shift](const Eigen::Matrix<double, D, 1>& x) {
    return sigma_t(x) + shift;
  };
  const double t_next = previous.time + config.dt;
  const auto* prev = &previous;
  auto source = config.source;
  const auto* angles = &config.angles;
  eff.q_tilde = [prev, source, angles, shift, t_next](const Eigen::Matrix<double, D, 1>& x,
                                                      int m, int e) {
    const double q = source ? source(x, angles->directions[m], t_next) : 0.0;
    return q + shift * prev->intensities[m].eval(e, x);
  };
  return eff;
}

template <int D>
std::vector<int> sweep_order(const SimplicialMesh<D>& mesh,
                             const Eigen::Matrix<double, D, 1>& direction) {
  const auto& topo = mesh.topology();
  const int n = mesh.n_elements();
  std::vector<int> indegree(n, 0);
  for (const auto& facet : topo.facets) {
    if (facet.boundary()) continue;
    // outward component w.r.t. elem[0]
    double omega_n;
    if constexpr (D == 1) {
      const int f0 = facet.local[0];
      omega_n = direction(0) * (f0 == 0 ? 1.0 : -1.0);
    } else {
      omega_n = direction.dot(mesh.outward_normal(facet.elem[0], facet.local[0]));
    }
    if (omega_n > kGrazing)
      ++indegree[facet.elem[1]];
    else if (omega_n < -kGrazing)
      ++indegree[facet.elem[0]];
  }
  std::set<int> ready;
  for (int e = 0; e < n; ++e)
    if (indegree[e] == 0) ready.insert(e);
  std::vector<int> order;
  order.reserve(n);
  while (!ready.empty()) {
    const int e = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(e);
    for (int f = 0; f < D + 1; ++f) {
      const auto& facet = topo.facets[topo.element_facets[e][f]];
      if (facet.boundary()) continue;
      const int other = facet.elem[0] == e ? facet.elem[1] : facet.elem[0];
      double omega_n;
      if constexpr (D == 1) {
        omega_n = direction(0) * (f == 0 ? 1.0 : -1.0);
      } else {
        omega_n = direction.dot(mesh.outward_normal(e, f));
      }
      if (omega_n > kGrazing && --indegree[other] == 0) ready.insert(other);
    }
  }
  if (static_cast<int>(order.size()) != n)
    throw CyclicDependency("upwind dependency graph has a cycle for this direction");
  return order;
}

// ---------------------------------------------------------------------------

template <int D>
struct RteSolver<D>::Impl {
  using Point = Eigen::Matrix<double, D, 1>;
  using Coeffs = typename DGField<D>::Coeffs;

  std::shared_ptr<const SimplicialMesh<D>> mesh;
  RteConfig<D> config;
  const RteRefTables<D>& tables;
  const ReferenceBasis<D>& basis;
  const Eigen::MatrixXd& pp_table;
  int n_b, n_elem, n_dir;
  double shift;  // 1/(c dt)

  std::vector<AffineMap<D>> maps;
  Eigen::VectorXd dets;
  // physical volume quadrature points per element (nq x D each)
  std::vector<Eigen::MatrixXd> vol_points;
  // sigma-weighted mass matrices (empty when the coefficient is constant)
  std::vector<LocalMat> mass_sigma_t, mass_sigma_s;

  struct FacetData {
    double measure = 1.0;
    Point normal = Point::Zero();  // canonical
    Eigen::MatrixXd points;        // nq x D physical
    Eigen::MatrixXd phi[2];        // nq x n_b per side
    double sign[2] = {1.0, -1.0};
  };
  std::vector<FacetData> facets;

  std::vector<std::vector<int>> orders;  // per direction; empty -> coupled
  std::vector<Eigen::PartialPivLU<LocalMat>> lu;  // (m * n_elem + e)
  bool any_coupled = false;

  Impl(std::shared_ptr<const SimplicialMesh<D>> mesh_in, const RteConfig<D>& config_in)
      : mesh(std::move(mesh_in)),
        config(config_in),
        tables(rte_tables<D>(config_in.degree)),
        basis(reference_basis<D>(config_in.degree)),
        pp_table(pp_basis_table<D>(config_in.degree <= 2 ? config_in.degree : 2)),
        n_b(tables.n_b),
        n_elem(mesh->n_elements()),
        n_dir(config_in.angles.size()),
        shift(1.0 / (config_in.c * config_in.dt)) {
    config.validate();
    build_geometry();
    build_orders();
    build_factorizations();
  }

  void build_geometry() {
    const auto& topo = mesh->topology();
    maps.resize(n_elem);
    dets.resize(n_elem);
    vol_points.resize(n_elem);
    const int nq = tables.vol_rule.size();
    parallel_for(n_elem, config.threads, [&](int e) {
      maps[e] = mesh->affine_map(e);
      dets(e) = maps[e].determinant;
      Eigen::MatrixXd pts(nq, D);
      for (int q = 0; q < nq; ++q) {
        Point ref;
        for (int d = 0; d < D; ++d) ref(d) = tables.vol_rule.points(q, d);
        pts.row(q) = maps[e].to_physical(ref).transpose();
      }
      vol_points[e] = std::move(pts);
    });

    if (!config.sigma_t.constant) {
      mass_sigma_t.resize(n_elem);
      parallel_for(n_elem, config.threads, [&](int e) {
        mass_sigma_t[e] = weighted_mass(e, config.sigma_t);
      });
    }
    if (!config.sigma_s.constant) {
      mass_sigma_s.resize(n_elem);
      parallel_for(n_elem, config.threads, [&](int e) {
        mass_sigma_s[e] = weighted_mass(e, config.sigma_s);
      });
    }

    const int n_facets = static_cast<int>(topo.facets.size());
    const int nq_f = facet_quadrature_size(D, config.degree);
    facets.resize(n_facets);
    parallel_for(n_facets, config.threads, [&](int f) {
      const auto& facet = topo.facets[f];
      FacetData data;
      data.points.resize(nq_f, D);
      if constexpr (D == 1) {
        data.points(0, 0) = mesh->vertex(facet.vertices[0])(0);
        data.normal(0) = 1.0;
        data.measure = 1.0;
      } else {
        const Eigen::Vector2d a = mesh->vertex(facet.vertices[0]);
        const Eigen::Vector2d b = mesh->vertex(facet.vertices[1]);
        const Eigen::Vector2d t = b - a;
        data.measure = t.norm();
        data.normal = Eigen::Vector2d(t(1), -t(0)) / data.measure;
        for (int q = 0; q < nq_f; ++q)
          data.points.row(q) = (a + tables.facet_rule.points(q, 0) * t).transpose();
      }
      for (int side = 0; side < 2; ++side) {
        const int e = facet.elem[side];
        if (e < 0) continue;
        data.sign[side] = outward_sign(e, facet.local[side], facet);
        Eigen::MatrixXd phi(nq_f, n_b);
        for (int q = 0; q < nq_f; ++q) {
          Point x;
          for (int d = 0; d < D; ++d) x(d) = data.points(q, d);
          phi.row(q) = basis.values(maps[e].to_reference(x)).transpose();
        }
        data.phi[side] = std::move(phi);
      }
      facets[f] = std::move(data);
    });
  }

  double outward_sign(int e, int local_facet, const typename MeshTopology<D>::Facet& facet) const {
    if constexpr (D == 1) {
      (void)facet;
      (void)e;
      return local_facet == 0 ? 1.0 : -1.0;
    } else {
      const auto local = MeshTopology<D>::local_facet_vertices(local_facet);
      const auto& el = mesh->topology().elements[e];
      return el[local[0]] == facet.vertices[0] ? 1.0 : -1.0;
    }
  }

  LocalMat weighted_mass(int e, const SpatialCoeff<D>& coeff) const {
    LocalMat m = LocalMat::Zero(n_b, n_b);
    for (int q = 0; q < tables.vol_rule.size(); ++q) {
      Point x;
      for (int d = 0; d < D; ++d) x(d) = vol_points[e](q, d);
      const double w = tables.vol_rule.weights(q) * dets(e) * coeff(x);
      for (int i = 0; i < n_b; ++i)
        for (int j = 0; j < n_b; ++j)
          m(i, j) += w * tables.vol_phi(q, i) * tables.vol_phi(q, j);
    }
    return m;
  }

  double facet_weight(int q) const { return D == 1 ? 1.0 : tables.facet_rule.weights(q); }

  void build_orders() {
    orders.resize(n_dir);
    for (int m = 0; m < n_dir; ++m) {
      try {
        orders[m] = sweep_order<D>(*mesh, config.angles.directions[m]);
      } catch (const CyclicDependency&) {
        orders[m].clear();
        any_coupled = true;
      }
    }
  }

  LocalMat assemble_matrix(int e, int m) const {
    const auto& dir = config.angles.directions[m];
    LocalMat a;
    if (config.sigma_t.constant) {
      a = LocalMat::Zero(n_b, n_b);
      const double diag = (*config.sigma_t.constant + shift) * dets(e);
      for (int i = 0; i < n_b; ++i) a(i, i) = diag;
    } else {
      a = mass_sigma_t[e];
      const double diag = shift * dets(e);
      for (int i = 0; i < n_b; ++i) a(i, i) += diag;
    }
    // convection -int_K I Omega . grad(phi)
    const Point w = maps[e].inverse * dir;
    for (int l = 0; l < D; ++l) a -= (dets(e) * w(l)) * tables.convection[l];
    // outflow facets
    const auto& topo = mesh->topology();
    for (int f = 0; f < D + 1; ++f) {
      const int fid = topo.element_facets[e][f];
      const auto& fd = facets[fid];
      const int side = topo.facets[fid].elem[0] == e ? 0 : 1;
      const double omega_n = fd.sign[side] * dir.dot(fd.normal);
      if (omega_n <= kGrazing) continue;
      const auto& phi = fd.phi[side];
      for (int q = 0; q < phi.rows(); ++q) {
        const double wq = omega_n * fd.measure * facet_weight(q);
        for (int i = 0; i < n_b; ++i)
          for (int j = 0; j < n_b; ++j) a(i, j) += wq * phi(q, i) * phi(q, j);
      }
    }
    return a;
  }

  void build_factorizations() {
    lu.resize(static_cast<std::size_t>(n_dir) * n_elem);
    parallel_for(n_dir * n_elem, config.threads, [&](int k) {
      const int m = k / n_elem;
      const int e = k % n_elem;
      LocalMat a = assemble_matrix(e, m);
      lu[k].compute(a);
      if (!(std::abs(lu[k].determinant()) > 0.0))
        throw SingularLocalSystem("singular local system in element " + std::to_string(e));
    });
  }

  // volumetric moments of the separable source terms at t_next
  std::vector<std::vector<LocalVec>> separable_moments(double t_next) const {
    std::vector<std::vector<LocalVec>> moments;
    const auto& terms = config.separable_source;
    moments.resize(terms.size());
    for (std::size_t k = 0; k < terms.size(); ++k) {
      moments[k].resize(n_elem);
      parallel_for(n_elem, config.threads, [&](int e) {
        LocalVec v = LocalVec::Zero(n_b);
        for (int q = 0; q < tables.vol_rule.size(); ++q) {
          Point x;
          for (int d = 0; d < D; ++d) x(d) = vol_points[e](q, d);
          const double w = tables.vol_rule.weights(q) * dets(e) * terms[k].spatial(x, t_next);
          for (int i = 0; i < n_b; ++i) v(i) += w * tables.vol_phi(q, i);
        }
        moments[k][e] = v;
      });
    }
    return moments;
  }

  LocalVec assemble_rhs(int e, int m, const Coeffs& psi, const Coeffs& prev_m,
                        const Coeffs& current_m, double t_next,
                        const std::vector<std::vector<LocalVec>>& qmom) const {
    const auto& dir = config.angles.directions[m];
    LocalVec b = LocalVec::Zero(n_b);
    // scattering source sigma_s Psi
    if (config.sigma_s.constant) {
      if (*config.sigma_s.constant != 0.0) {
        const double w = *config.sigma_s.constant * dets(e);
        for (int i = 0; i < n_b; ++i) b(i) += w * psi(e, i);
      }
    } else {
      b += mass_sigma_s[e] * psi.row(e).transpose();
    }
    // previous-time contribution of q_tilde
    const double wprev = shift * dets(e);
    for (int i = 0; i < n_b; ++i) b(i) += wprev * prev_m(e, i);
    // volumetric source
    if (!config.separable_source.empty()) {
      for (std::size_t k = 0; k < qmom.size(); ++k) {
        const double g = config.separable_source[k].angular(dir);
        if (g != 0.0) b += g * qmom[k][e];
      }
    } else if (config.source) {
      for (int q = 0; q < tables.vol_rule.size(); ++q) {
        Point x;
        for (int d = 0; d < D; ++d) x(d) = vol_points[e](q, d);
        const double w = tables.vol_rule.weights(q) * dets(e) * config.source(x, dir, t_next);
        for (int i = 0; i < n_b; ++i) b(i) += w * tables.vol_phi(q, i);
      }
    }
    // inflow facets
    const auto& topo = mesh->topology();
    for (int f = 0; f < D + 1; ++f) {
      const int fid = topo.element_facets[e][f];
      const auto& facet = topo.facets[fid];
      const auto& fd = facets[fid];
      const int side = facet.elem[0] == e ? 0 : 1;
      const double omega_n = fd.sign[side] * dir.dot(fd.normal);
      if (omega_n >= -kGrazing) continue;
      const double scale = -omega_n * fd.measure;  // |omega_n| measure
      const auto& phi_self = fd.phi[side];
      if (facet.boundary()) {
        if (!config.inflow) continue;
        for (int q = 0; q < phi_self.rows(); ++q) {
          Point x;
          for (int d = 0; d < D; ++d) x(d) = fd.points(q, d);
          const double value = config.inflow(x, dir, t_next);
          const double w = scale * facet_weight(q) * value;
          for (int i = 0; i < n_b; ++i) b(i) += w * phi_self(q, i);
        }
      } else {
        const int other = facet.elem[0] == e ? facet.elem[1] : facet.elem[0];
        const auto& phi_other = fd.phi[1 - side];
        for (int q = 0; q < phi_self.rows(); ++q) {
          double value = 0.0;
          for (int j = 0; j < n_b; ++j) value += phi_other(q, j) * current_m(other, j);
          const double w = scale * facet_weight(q) * value;
          for (int i = 0; i < n_b; ++i) b(i) += w * phi_self(q, i);
        }
      }
    }
    return b;
  }

  // limit one element row in place; returns lambda<1 event and negative-average event
  void limit_row(Coeffs& coeffs, int e, SourceIterationReport& report) const {
    const double phi0 = ReferenceBasis<D>::phi0();
    const double avg = coeffs(e, 0) * phi0;
    if (avg < 0.0) {
      report.worst_average = std::min(report.worst_average, avg);
      ++report.negative_average_cells;
      ++report.limited_cells;
      coeffs.row(e).setZero();
      return;
    }
    double z = 0.0;
    for (int q = 0; q < pp_table.rows(); ++q) {
      double v = 0.0;
      for (int j = 0; j < n_b; ++j) v += pp_table(q, j) * coeffs(e, j);
      z = std::min(z, v);
    }
    if (z == 0.0) return;
    double lambda = (avg == 0.0) ? 0.0 : avg / (avg - z);
    lambda *= 1.0 - 1e-13;
    for (int j = 1; j < n_b; ++j) coeffs(e, j) *= lambda;
    ++report.limited_cells;
  }

  // sweep one direction with the newest traces; per-element limiting keeps
  // downstream inflow nonnegative
  void sweep_direction(int m, Coeffs& coeffs, const Coeffs& psi, const Coeffs& prev_m,
                       double t_next, const std::vector<std::vector<LocalVec>>& qmom,
                       SourceIterationReport& report) {
    if (orders[m].empty() || config.force_coupled) {
      coupled_direction_solve(m, coeffs, psi, prev_m, t_next, qmom);
      report.used_coupled_fallback = true;
      if (config.pp_limiter)
        for (int e = 0; e < n_elem; ++e) limit_row(coeffs, e, report);
      return;
    }
    for (int e : orders[m]) {
      const LocalVec b = assemble_rhs(e, m, psi, prev_m, coeffs, t_next, qmom);
      const LocalVec x = lu[static_cast<std::size_t>(m) * n_elem + e].solve(b);
      for (int j = 0; j < n_b; ++j) coeffs(e, j) = x(j);
      if (config.pp_limiter) limit_row(coeffs, e, report);
    }
  }

  // global upwind system for one direction (cycle fallback)
  void coupled_direction_solve(int m, Coeffs& coeffs, const Coeffs& psi,
                               const Coeffs& prev_m, double t_next,
                               const std::vector<std::vector<LocalVec>>& qmom) {
    const auto& dir = config.angles.directions[m];
    const int n = n_elem * n_b;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(n_elem) * n_b * n_b * (D + 2));
    Eigen::VectorXd rhs(n);
    const auto& topo = mesh->topology();
    const Coeffs zero = Coeffs::Zero(n_elem, n_b);
    for (int e = 0; e < n_elem; ++e) {
      const LocalMat a = assemble_matrix(e, m);
      for (int i = 0; i < n_b; ++i)
        for (int j = 0; j < n_b; ++j)
          trip.emplace_back(e * n_b + i, e * n_b + j, a(i, j));
      // interior inflow couplings move to the left side
      for (int f = 0; f < D + 1; ++f) {
        const int fid = topo.element_facets[e][f];
        const auto& facet = topo.facets[fid];
        if (facet.boundary()) continue;
        const auto& fd = facets[fid];
        const int side = facet.elem[0] == e ? 0 : 1;
        const double omega_n = fd.sign[side] * dir.dot(fd.normal);
        if (omega_n >= -kGrazing) continue;
        const int other = facet.elem[0] == e ? facet.elem[1] : facet.elem[0];
        const double scale = -omega_n * fd.measure;
        const auto& phi_self = fd.phi[side];
        const auto& phi_other = fd.phi[1 - side];
        for (int q = 0; q < phi_self.rows(); ++q) {
          const double w = scale * facet_weight(q);
          for (int i = 0; i < n_b; ++i)
            for (int j = 0; j < n_b; ++j)
              trip.emplace_back(e * n_b + i, other * n_b + j,
                                -w * phi_self(q, i) * phi_other(q, j));
        }
      }
      // right side without the interior-trace terms
      const LocalVec b = assemble_rhs(e, m, psi, prev_m, zero, t_next, qmom);
      for (int i = 0; i < n_b; ++i) rhs(e * n_b + i) = b(i);
    }
    Eigen::SparseMatrix<double> mat(n, n);
    mat.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> solver;
    solver.compute(mat);
    if (solver.info() != Eigen::Success)
      throw SingularLocalSystem("coupled direction solve failed to factorize");
    const Eigen::VectorXd x = solver.solve(rhs);
    for (int e = 0; e < n_elem; ++e)
      for (int j = 0; j < n_b; ++j) coeffs(e, j) = x(e * n_b + j);
  }
};

template <int D>
RteSolver<D>::RteSolver(std::shared_ptr<const SimplicialMesh<D>> mesh,
                        const RteConfig<D>& config)
    : impl_(std::make_unique<Impl>(std::move(mesh), config)) {}

template <int D>
RteSolver<D>::~RteSolver() = default;

template <int D>
RteSolver<D>::RteSolver(RteSolver&&) noexcept = default;

template <int D>
SourceIterationReport RteSolver<D>::step(RadiativeState<D>& state) {
  Impl& s = *impl_;
  using Coeffs = typename Impl::Coeffs;
  if (state.mesh_ptr().get() != s.mesh.get()) {
    bool same = state.mesh().n_vertices() == s.mesh->n_vertices();
    for (int i = 0; same && i < s.mesh->n_vertices(); ++i)
      if (state.mesh().vertex(i) != s.mesh->vertex(i)) same = false;
    if (!same) throw ValidationError("state does not live on the solver's mesh");
  }
  if (static_cast<int>(state.intensities.size()) != s.n_dir)
    throw ValidationError("state direction count does not match the solver");

  const double t_next = state.time + s.config.dt;
  const auto qmom = s.config.separable_source.empty()
                        ? std::vector<std::vector<LocalVec>>{}
                        : s.separable_moments(t_next);

  // previous-time coefficients (q_tilde) stay frozen during the iteration
  std::vector<Coeffs> prev(s.n_dir);
  for (int m = 0; m < s.n_dir; ++m) prev[m] = state.intensities[m].coeffs();

  Coeffs psi = Coeffs::Zero(s.n_elem, s.n_b);
  for (int m = 0; m < s.n_dir; ++m)
    psi += s.config.angles.weights(m) * state.intensities[m].coeffs();

  SourceIterationReport report;
  const bool scattering_free = s.config.sigma_s.is_zero();
  while (true) {
    double delta_max = 0.0;
    if (!s.config.jacobi) {
      for (int m = 0; m < s.n_dir; ++m) {
        Coeffs& coeffs = state.intensities[m].coeffs();
        const Coeffs old = coeffs;
        s.sweep_direction(m, coeffs, psi, prev[m], t_next, qmom, report);
        psi += s.config.angles.weights(m) * (coeffs - old);
        delta_max = std::max(delta_max, (coeffs - old).cwiseAbs().maxCoeff());
      }
    } else {
      const Coeffs psi_frozen = psi;
      std::vector<double> deltas(s.n_dir, 0.0);
      std::vector<SourceIterationReport> reps(s.n_dir);
      parallel_for(s.n_dir, s.config.threads, [&](int m) {
        Coeffs& coeffs = state.intensities[m].coeffs();
        const Coeffs old = coeffs;
        s.sweep_direction(m, coeffs, psi_frozen, prev[m], t_next, qmom, reps[m]);
        deltas[m] = (coeffs - old).cwiseAbs().maxCoeff();
      });
      psi.setZero();
      for (int m = 0; m < s.n_dir; ++m) {
        psi += s.config.angles.weights(m) * state.intensities[m].coeffs();
        delta_max = std::max(delta_max, deltas[m]);
        report.limited_cells += reps[m].limited_cells;
        report.negative_average_cells += reps[m].negative_average_cells;
        report.worst_average = std::min(report.worst_average, reps[m].worst_average);
        report.used_coupled_fallback |= reps[m].used_coupled_fallback;
      }
    }
    ++report.iterations;
    report.update_history.push_back(delta_max);
    if (scattering_free) {
      // directions decouple: one pass of newest-trace sweeps is the exact
      // fixed point
      report.final_update = 0.0;
      break;
    }
    if (delta_max < s.config.si_tolerance) {
      report.final_update = delta_max;
      break;
    }
    if (report.iterations >= s.config.si_max_iterations)
      throw NoConvergence("source iteration did not reach tolerance " +
                          std::to_string(s.config.si_tolerance));
  }
  state.time = t_next;
  return report;
}

template <int D>
Eigen::VectorXd RteSolver<D>::local_solve_dense(int element, int direction,
                                                const RadiativeState<D>& state,
                                                const DGField<D>& scalar_flux,
                                                double t_next) const {
  Impl& s = *impl_;
  const auto qmom = s.config.separable_source.empty()
                        ? std::vector<std::vector<LocalVec>>{}
                        : s.separable_moments(t_next);
  const LocalMat a = s.assemble_matrix(element, direction);
  const LocalVec b = s.assemble_rhs(element, direction, scalar_flux.coeffs(),
                                    state.intensities[direction].coeffs(),
                                    state.intensities[direction].coeffs(), t_next, qmom);
  Eigen::FullPivLU<Eigen::MatrixXd> dense(Eigen::MatrixXd(a));
  if (!dense.isInvertible())
    throw SingularLocalSystem("local system is singular");
  return dense.solve(Eigen::VectorXd(b));
}

template <int D>
SourceIterationReport rte_step(RadiativeState<D>& state, const RteConfig<D>& config) {
  RteSolver<D> solver(state.mesh_ptr(), config);
  return solver.step(state);
}

template struct RteConfig<1>;
template struct RteConfig<2>;
template struct RadiativeState<1>;
template struct RadiativeState<2>;
template RadiativeState<1> initial_state<1>(const RteConfig<1>&,
                                            std::shared_ptr<const SimplicialMesh<1>>);
template RadiativeState<2> initial_state<2>(const RteConfig<2>&,
                                            std::shared_ptr<const SimplicialMesh<2>>);
template EffectiveCoeffs<1> effective_coeffs<1>(const RteConfig<1>&, const RadiativeState<1>&);
template EffectiveCoeffs<2> effective_coeffs<2>(const RteConfig<2>&, const RadiativeState<2>&);
template std::vector<int> sweep_order<1>(const SimplicialMesh<1>&,
                                         const Eigen::Matrix<double, 1, 1>&);
template std::vector<int> sweep_order<2>(const SimplicialMesh<2>&,
                                         const Eigen::Matrix<double, 2, 1>&);
template class RteSolver<1>;
template class RteSolver<2>;
template SourceIterationReport rte_step<1>(RadiativeState<1>&, const RteConfig<1>&);
template SourceIterationReport rte_step<2>(RadiativeState<2>&, const RteConfig<2>&);

}  // namespace dgremap

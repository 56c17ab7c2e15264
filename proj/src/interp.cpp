#include "dgremap/interp.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "dgremap/common.hpp"

namespace dgremap {

double default_cfl(int dim, int r) {
  if (r == 1) return 0.25;
  if (r == 2) return dim == 1 ? 1.0 / 6.0 : 1.0 / 9.0;
  return 1.0 / (2.0 * r + 1.0);
}

void InterpOptions::validate(int dim, int r) const {
  std::vector<std::string> problems;
  const double c = resolved_cfl(dim, r);
  if (!(c > 0.0) || c > 1.0) problems.push_back("cfl must lie in (0, 1]");
  if (pp_limiter && r > 2) problems.push_back("positivity limiter supports r = 1, 2");
  if (max_steps < 1) problems.push_back("max_steps must be positive");
  if (!problems.empty()) throw ValidationError(problems);
}

std::string InterpStats::to_csv_header() const {
  return "n_steps,mass_before,mass_after,min_before,min_after,limited_cells,"
         "limit_applications,dsigma_cfl,dsigma_pp";
}

namespace {

using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor,
                               6, 6>;
using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 6, 1>;

// static reference tables per (D, r)
template <int D>
struct RefTables {
  QuadratureRule vol_rule;
  Eigen::MatrixXd vol_phi;                  // n_q x n_b
  std::array<Eigen::MatrixXd, D> vol_grad;  // n_q x n_b
  Eigen::MatrixXd vol_bary;                 // n_q x (D+1)
  QuadratureRule facet_rule;                // on [0,1]; single midpointless node in 1D
  int n_b = 0;

  explicit RefTables(int r) {
    const auto& basis = reference_basis<D>(r);
    n_b = basis.size();
    if constexpr (D == 1)
      vol_rule = gauss_legendre_unit(r + 2);
    else
      vol_rule = triangle_quadrature(2 * r + 2);
    vol_phi = basis.tabulate(vol_rule.points);
    for (int d = 0; d < D; ++d) vol_grad[d] = basis.tabulate_gradient(vol_rule.points, d);
    vol_bary.resize(vol_rule.size(), D + 1);
    for (int q = 0; q < vol_rule.size(); ++q) {
      double rest = 1.0;
      for (int d = 0; d < D; ++d) {
        vol_bary(q, d + 1) = vol_rule.points(q, d);
        rest -= vol_rule.points(q, d);
      }
      vol_bary(q, 0) = rest;
    }
    facet_rule = (D == 1) ? QuadratureRule{} : gauss_legendre_unit(r + 1);
  }
};

template <int D>
const RefTables<D>& ref_tables(int r) {
  static std::map<int, RefTables<D>> cache;
  auto it = cache.find(r);
  if (it == cache.end()) it = cache.emplace(r, RefTables<D>(r)).first;
  return it->second;
}

// Geometry- and velocity-dependent residual operator for one stage mesh.
// The per-element application is res_K = combined_K u_K + sum_f neigh_{K,f} u_{K'}.
template <int D>
class ResidualOperator {
 public:
  ResidualOperator(const SimplicialMesh<D>& mesh, const MeshMotion<D>& motion, int r,
                   int threads)
      : mesh_(mesh), tables_(ref_tables<D>(r)), basis_(reference_basis<D>(r)) {
    const int n_elem = mesh.n_elements();
    const int n_b = tables_.n_b;
    const auto& topo = mesh.topology();
    const int nq_f = facet_quadrature_size(D, r);

    maps_.resize(n_elem);
    divv_.resize(n_elem);
    parallel_for(n_elem, threads, [&](int e) {
      maps_[e] = mesh.affine_map(e);
      divv_(e) = velocity_divergence(motion, mesh, e);
    });

    // canonical facet quadrature: points and velocities from the ascending
    // vertex pair so both sides evaluate identical numbers
    const int n_facets = static_cast<int>(topo.facets.size());
    facet_phi_[0].resize(n_facets);
    facet_phi_[1].resize(n_facets);
    facet_vn_.resize(n_facets);
    facet_alpha_ = Eigen::VectorXd::Zero(n_facets);
    facet_measure_ = Eigen::VectorXd::Zero(n_facets);
    parallel_for(n_facets, threads, [&](int f) {
      const auto& facet = topo.facets[f];
      if (facet.boundary()) return;  // zero flux: the boundary does not move
      Eigen::Matrix<double, Eigen::Dynamic, 1> vn(nq_f);
      double alpha = 0.0, measure = 1.0;
      Eigen::MatrixXd phys(nq_f, D);
      if constexpr (D == 1) {
        const int v = facet.vertices[0];
        phys.row(0) = mesh.vertex(v).transpose();
        // canonical normal +1; Xdot at a vertex is the vertex displacement
        vn(0) = motion.displacement()[v](0);
        alpha = std::abs(vn(0));
      } else {
        const int va = facet.vertices[0], vb = facet.vertices[1];
        const Eigen::Vector2d a = mesh.vertex(va), b = mesh.vertex(vb);
        const Eigen::Vector2d t = b - a;
        measure = t.norm();
        const Eigen::Vector2d n(t(1) / measure, -t(0) / measure);
        const auto& rule = tables_.facet_rule;
        for (int q = 0; q < nq_f; ++q) {
          const double s = rule.points(q, 0);
          const Eigen::Vector2d x = a + s * t;
          const Eigen::Vector2d vel = (1.0 - s) * motion.displacement()[va] +
                                      s * motion.displacement()[vb];
          phys.row(q) = x.transpose();
          vn(q) = vel.dot(n);
          alpha = std::max(alpha, std::abs(vn(q)));
        }
      }
      facet_vn_[f] = vn;
      facet_alpha_(f) = alpha;
      facet_measure_(f) = measure;
      for (int side = 0; side < 2; ++side) {
        const int e = facet.elem[side];
        Eigen::MatrixXd phi(nq_f, n_b);
        for (int q = 0; q < nq_f; ++q) {
          Eigen::Matrix<double, D, 1> x;
          for (int d = 0; d < D; ++d) x(d) = phys(q, d);
          phi.row(q) = basis_.values(maps_[e].to_reference(x)).transpose();
        }
        facet_phi_[side][f] = phi;
      }
    });

    // per-element blocks
    combined_.resize(n_elem);
    neighbor_.resize(n_elem);
    parallel_for(n_elem, threads, [&](int e) {
      SmallMat block = SmallMat::Zero(n_b, n_b);
      // volume term: detF * sum_q w_q phi_j (velref . gradhat_i)
      const AffineMap<D>& map = maps_[e];
      const auto& el = topo.elements[e];
      for (int q = 0; q < tables_.vol_rule.size(); ++q) {
        Eigen::Matrix<double, D, 1> vel = Eigen::Matrix<double, D, 1>::Zero();
        for (int k = 0; k <= D; ++k)
          vel += tables_.vol_bary(q, k) * motion.displacement()[el[k]];
        const Eigen::Matrix<double, D, 1> velref = map.inverse * vel;
        const double wdet = tables_.vol_rule.weights(q) * map.determinant;
        for (int i = 0; i < n_b; ++i) {
          double gi = 0.0;
          for (int d = 0; d < D; ++d) gi += velref(d) * tables_.vol_grad[d](q, i);
          for (int j = 0; j < n_b; ++j) block(i, j) += wdet * gi * tables_.vol_phi(q, j);
        }
      }
      // facet terms
      for (int f = 0; f < D + 1; ++f) {
        const int fid = topo.element_facets[e][f];
        const auto& facet = topo.facets[fid];
        if (facet.boundary()) continue;
        const int side = facet.elem[0] == e ? 0 : 1;
        const double sign = side_sign(e, f, facet);
        const auto& phi_self = facet_phi_[side][fid];
        const auto& phi_out = facet_phi_[1 - side][fid];
        const double alpha = facet_alpha_(fid);
        const double measure = facet_measure_(fid);
        SmallMat xblk = SmallMat::Zero(n_b, n_b);
        for (int q = 0; q < phi_self.rows(); ++q) {
          const double w = facet_weight(q) * measure;
          const double vn = sign * facet_vn_[fid](q);
          const double cin = 0.5 * (alpha - vn);
          const double cout = -0.5 * (vn + alpha);
          for (int i = 0; i < n_b; ++i) {
            const double wphi = w * phi_self(q, i);
            for (int j = 0; j < n_b; ++j) {
              block(i, j) += wphi * cin * phi_self(q, j);
              xblk(i, j) += wphi * cout * phi_out(q, j);
            }
          }
        }
        neighbor_[e][f] = std::move(xblk);
      }
      combined_[e] = std::move(block);
    });
  }

  int n_b() const { return tables_.n_b; }
  const Eigen::VectorXd& velocity_divergence() const { return divv_; }
  const SimplicialMesh<D>& mesh() const { return mesh_; }

  // res = A(u, phi_i o F^{-1})|_K, one row per element
  void apply(const typename DGField<D>::Coeffs& u, typename DGField<D>::Coeffs& res,
             int threads) const {
    const auto& topo = mesh_.topology();
    const int n_elem = mesh_.n_elements();
    parallel_for(n_elem, threads, [&](int e) {
      SmallVec r = combined_[e] * u.row(e).transpose();
      for (int f = 0; f < D + 1; ++f) {
        const int fid = topo.element_facets[e][f];
        const auto& facet = topo.facets[fid];
        if (facet.boundary()) continue;
        const int other = facet.elem[0] == e ? facet.elem[1] : facet.elem[0];
        r += neighbor_[e][f] * u.row(other).transpose();
      }
      res.row(e) = r.transpose();
    });
  }

  // max over interior facet quadrature points of |Xdot . n|
  double max_normal_velocity() const {
    double vmax = 0.0;
    for (int f = 0; f < static_cast<int>(facet_alpha_.size()); ++f)
      if (!mesh_.topology().facets[f].boundary()) vmax = std::max(vmax, facet_alpha_(f));
    return vmax;
  }

 private:
  double facet_weight(int q) const {
    return D == 1 ? 1.0 : tables_.facet_rule.weights(q);
  }

  // sign converting the canonical facet normal into the outward normal of e
  double side_sign(int e, int f, const typename MeshTopology<D>::Facet& facet) const {
    if constexpr (D == 1) {
      // canonical normal is +1; outward is +1 at the right end (local facet 0)
      (void)facet;
      (void)e;
      return f == 0 ? 1.0 : -1.0;
    } else {
      const auto local = MeshTopology<D>::local_facet_vertices(f);
      const auto& el = mesh_.topology().elements[e];
      // element traverses the facet CCW as (local[0] -> local[1]); the
      // canonical tangent runs from the smaller vertex id, and rotating the
      // CCW tangent by -90 degrees gives the outward normal
      return el[local[0]] == facet.vertices[0] ? 1.0 : -1.0;
    }
  }

  const SimplicialMesh<D>& mesh_;
  const RefTables<D>& tables_;
  const ReferenceBasis<D>& basis_;
  std::vector<AffineMap<D>> maps_;
  Eigen::VectorXd divv_;
  std::array<std::vector<Eigen::MatrixXd>, 2> facet_phi_;
  std::vector<Eigen::VectorXd> facet_vn_;
  Eigen::VectorXd facet_alpha_;
  Eigen::VectorXd facet_measure_;
  std::vector<SmallMat> combined_;
  std::vector<std::array<SmallMat, D + 1>> neighbor_;
};

template <int D>
double max_normal_velocity(const MeshMotion<D>& motion, const SimplicialMesh<D>& mesh,
                           int r) {
  const auto& topo = mesh.topology();
  const int nq_f = facet_quadrature_size(D, r);
  const QuadratureRule rule = D == 1 ? QuadratureRule{} : gauss_legendre_unit(r + 1);
  double vmax = 0.0;
  for (const auto& facet : topo.facets) {
    if (facet.boundary()) continue;
    if constexpr (D == 1) {
      vmax = std::max(vmax, std::abs(motion.displacement()[facet.vertices[0]](0)));
    } else {
      const Eigen::Vector2d a = mesh.vertex(facet.vertices[0]);
      const Eigen::Vector2d b = mesh.vertex(facet.vertices[1]);
      Eigen::Vector2d t = b - a;
      const double len = t.norm();
      const Eigen::Vector2d n(t(1) / len, -t(0) / len);
      for (int q = 0; q < nq_f; ++q) {
        const double s = rule.points(q, 0);
        const Eigen::Vector2d vel = (1.0 - s) * motion.displacement()[facet.vertices[0]] +
                                    s * motion.displacement()[facet.vertices[1]];
        vmax = std::max(vmax, std::abs(vel.dot(n)));
      }
    }
  }
  return vmax;
}

}  // namespace

template <int D>
double pseudo_timestep(const MeshMotion<D>& motion, double cfl) {
  const double hmin = std::min(min_element_height(motion.old_mesh()),
                               min_element_height(motion.new_mesh()));
  const double vmax = max_normal_velocity(motion, motion.old_mesh(), 2);
  if (vmax <= 0.0) return 1.0;
  return std::min(1.0, cfl * hmin / vmax);
}

template <int D>
double pp_timestep_bound(const MeshMotion<D>& motion, const SimplicialMesh<D>& stage_mesh,
                         int r) {
  const double w1 = pp_first_lobatto_weight(r);
  double ratio = std::numeric_limits<double>::infinity();
  for (int e = 0; e < stage_mesh.n_elements(); ++e) {
    double perim = 0.0;
    if constexpr (D == 1)
      perim = 2.0;  // boundary of an interval: two points of unit measure
    else
      for (int f = 0; f < D + 1; ++f) perim += stage_mesh.facet_measure(e, f);
    ratio = std::min(ratio, stage_mesh.volume(e) / perim);
  }
  const double vmax = max_normal_velocity(motion, stage_mesh, r);
  if (vmax <= 0.0) return 1.0;
  return std::min(1.0, (2.0 / 3.0) * w1 * ratio / vmax);
}

StageVolumes volume_update(double v0, double div0, double div1, double div_half,
                           double dsigma, int element) {
  StageVolumes v;
  v.v1 = v0 + dsigma * v0 * div0;
  v.v2 = 0.75 * v0 + 0.25 * (v.v1 + dsigma * v.v1 * div1);
  v.v3 = v0 / 3.0 + (2.0 / 3.0) * (v.v2 + dsigma * v.v2 * div_half);
  if (!(v.v1 > 0.0) || !(v.v2 > 0.0) || !(v.v3 > 0.0)) {
    std::ostringstream os;
    os << "volume update produced a nonpositive stage volume (" << v.v1 << ", " << v.v2
       << ", " << v.v3 << ") for element " << element;
    throw NonpositiveVolume(os.str(), element);
  }
  return v;
}

template <int D>
Eigen::MatrixXd spatial_residual(const DGField<D>& field,
                                 const SimplicialMesh<D>& mesh_at_stage,
                                 const MeshMotion<D>& motion) {
  ResidualOperator<D> op(mesh_at_stage, motion, field.degree(), 1);
  typename DGField<D>::Coeffs res(field.coeffs().rows(), field.coeffs().cols());
  op.apply(field.coeffs(), res, 1);
  return res;
}

namespace {

template <int D>
void limit_fields(std::vector<DGField<D>*>& fields, std::vector<InterpStats>* stats) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const LimiterReport rep = pp_limit(*fields[i], NegativeAveragePolicy::Error);
    if (stats) {
      (*stats)[i].limited_cells += rep.limited_cells;
      (*stats)[i].limit_applications += fields[i]->mesh().n_elements();
    }
  }
}

}  // namespace

namespace {

template <int D>
void advance_one_step(std::vector<DGField<D>*>& fields, const MeshMotion<D>& motion,
                      double sigma, double dsigma,
                      std::shared_ptr<const SimplicialMesh<D>>& mesh0,
                      const InterpOptions& options, std::vector<InterpStats>* stats) {
  const int r = fields[0]->degree();
  const int n_b = fields[0]->n_basis();
  const int n_elem = mesh0->n_elements();
  const double ref_measure = ReferenceBasis<D>::reference_measure();
  const int threads = options.threads;
  using Coeffs = typename DGField<D>::Coeffs;

  const ResidualOperator<D> op0(*mesh0, motion, r, threads);
  std::shared_ptr<const SimplicialMesh<D>> mesh1, mesh_half;
  std::unique_ptr<ResidualOperator<D>> op1, op_half;
  mesh1 = std::make_shared<const SimplicialMesh<D>>(motion.intermediate_mesh(sigma + dsigma));
  if (options.scheme != TimeScheme::Euler)
    op1 = std::make_unique<ResidualOperator<D>>(*mesh1, motion, r, threads);
  if (options.scheme == TimeScheme::RK3) {
    mesh_half = std::make_shared<const SimplicialMesh<D>>(
        motion.intermediate_mesh(sigma + 0.5 * dsigma));
    op_half = std::make_unique<ResidualOperator<D>>(*mesh_half, motion, r, threads);
  }

  // stage volumes per element (shared across fields; every field carries the
  // same tracked volumes)
  Eigen::VectorXd vol0 = fields[0]->volumes();
  Eigen::VectorXd vol1(n_elem), vol2(n_elem), vol_final(n_elem);
  if (options.volume_update == VolumeUpdate::GCL) {
    const Eigen::VectorXd& div0 = op0.velocity_divergence();
    for (int e = 0; e < n_elem; ++e) {
      const double d0 = div0(e);
      const double d1 = op1 ? op1->velocity_divergence()(e) : 0.0;
      const double dh = op_half ? op_half->velocity_divergence()(e) : 0.0;
      switch (options.scheme) {
        case TimeScheme::Euler:
          vol_final(e) = vol0(e) * (1.0 + dsigma * d0);
          break;
        case TimeScheme::RK2: {
          vol1(e) = vol0(e) * (1.0 + dsigma * d0);
          vol_final(e) = 0.5 * vol0(e) + 0.5 * vol1(e) * (1.0 + dsigma * d1);
          break;
        }
        case TimeScheme::RK3: {
          const StageVolumes sv = volume_update(vol0(e), d0, d1, dh, dsigma, e);
          vol1(e) = sv.v1;
          vol2(e) = sv.v2;
          vol_final(e) = sv.v3;
          break;
        }
      }
      if (!(vol_final(e) > 0.0) || (options.scheme != TimeScheme::Euler && !(vol1(e) > 0.0)))
        throw NonpositiveVolume("GCL volume became nonpositive", e);
    }
  } else {
    vol1 = mesh1->volumes();
    vol2 = options.scheme == TimeScheme::RK3 ? mesh_half->volumes() : Eigen::VectorXd();
    vol_final = mesh1->volumes();
  }

  const auto stage_combine = [&](const Coeffs& u_prev, const Eigen::VectorXd& vprev,
                                 const Coeffs& u_stage, const Eigen::VectorXd& vstage,
                                 const Coeffs& res, const Eigen::VectorXd& vnext,
                                 double a, double b, Coeffs& out) {
    parallel_for(n_elem, threads, [&](int e) {
      for (int j = 0; j < n_b; ++j) {
        const double m = a * vprev(e) * u_prev(e, j) +
                         b * (vstage(e) * u_stage(e, j) - dsigma * ref_measure * res(e, j));
        out(e, j) = m / vnext(e);
      }
    });
  };

  const std::size_t n_fields = fields.size();
  std::vector<Coeffs> work1(n_fields), work2(n_fields);
  Coeffs res(n_elem, n_b);

  // stage 1 (forward Euler step to sigma + dsigma)
  for (std::size_t i = 0; i < n_fields; ++i) {
    const Coeffs& u0 = fields[i]->coeffs();
    op0.apply(u0, res, threads);
    work1[i].resize(n_elem, n_b);
    const Eigen::VectorXd& vtarget = options.scheme == TimeScheme::Euler ? vol_final : vol1;
    stage_combine(u0, vol0, u0, vol0, res, vtarget, 0.0, 1.0, work1[i]);
  }
  if (options.scheme == TimeScheme::Euler) {
    for (std::size_t i = 0; i < n_fields; ++i) {
      fields[i]->coeffs() = work1[i];
      fields[i]->volumes() = vol_final;
      fields[i]->set_mesh(mesh1);
    }
    mesh0 = mesh1;
    if (options.pp_limiter) limit_fields(fields, stats);
    return;
  }

  if (options.pp_limiter) {
    for (std::size_t i = 0; i < n_fields; ++i) {
      const LimiterReport rep =
          pp_limit_coeffs<D>(work1[i], r, NegativeAveragePolicy::Error);
      if (stats) {
        (*stats)[i].limited_cells += rep.limited_cells;
        (*stats)[i].limit_applications += n_elem;
      }
    }
  }

  if (options.scheme == TimeScheme::RK2) {
    for (std::size_t i = 0; i < n_fields; ++i) {
      op1->apply(work1[i], res, threads);
      Coeffs out(n_elem, n_b);
      stage_combine(fields[i]->coeffs(), vol0, work1[i], vol1, res, vol_final, 0.5, 0.5,
                    out);
      fields[i]->coeffs() = out;
      fields[i]->volumes() = vol_final;
      fields[i]->set_mesh(mesh1);
    }
    mesh0 = mesh1;
    if (options.pp_limiter) limit_fields(fields, stats);
    return;
  }

  // RK3 stage 2 (at sigma + dsigma/2)
  for (std::size_t i = 0; i < n_fields; ++i) {
    op1->apply(work1[i], res, threads);
    work2[i].resize(n_elem, n_b);
    stage_combine(fields[i]->coeffs(), vol0, work1[i], vol1, res, vol2, 0.75, 0.25,
                  work2[i]);
  }
  if (options.pp_limiter) {
    for (std::size_t i = 0; i < n_fields; ++i) {
      const LimiterReport rep =
          pp_limit_coeffs<D>(work2[i], r, NegativeAveragePolicy::Error);
      if (stats) {
        (*stats)[i].limited_cells += rep.limited_cells;
        (*stats)[i].limit_applications += n_elem;
      }
    }
  }

  // RK3 stage 3 (back to sigma + dsigma)
  for (std::size_t i = 0; i < n_fields; ++i) {
    op_half->apply(work2[i], res, threads);
    Coeffs out(n_elem, n_b);
    stage_combine(fields[i]->coeffs(), vol0, work2[i], vol2, res, vol_final,
                  1.0 / 3.0, 2.0 / 3.0, out);
    fields[i]->coeffs() = out;
    fields[i]->volumes() = vol_final;
    fields[i]->set_mesh(mesh1);
  }
  mesh0 = mesh1;
  if (options.pp_limiter) limit_fields(fields, stats);
}

template <int D>
bool same_vertices(const SimplicialMesh<D>& a, const SimplicialMesh<D>& b) {
  if (a.n_vertices() != b.n_vertices()) return false;
  for (int i = 0; i < a.n_vertices(); ++i)
    if (a.vertex(i) != b.vertex(i)) return false;
  return true;
}

}  // namespace

template <int D>
void rk_step(DGField<D>& field, const MeshMotion<D>& motion, double sigma, double dsigma,
             const InterpOptions& options) {
  if (!(dsigma > 0.0)) throw ValidationError("rk_step requires dsigma > 0");
  options.validate(D, field.degree());
  std::vector<DGField<D>*> fields{&field};
  std::shared_ptr<const SimplicialMesh<D>> current = field.mesh_ptr();
  advance_one_step(fields, motion, sigma, dsigma, current, options, nullptr);
}

template <int D>
std::vector<InterpStats> interpolate_many(std::vector<DGField<D>*> fields,
                                          const MeshMotion<D>& motion,
                                          const InterpOptions& options) {
  if (fields.empty()) return {};
  const int r = fields[0]->degree();
  options.validate(D, r);
  for (const auto* f : fields) {
    if (f->degree() != r) throw ValidationError("all fields must share one degree");
    if (f->mesh_ptr().get() != &motion.old_mesh() &&
        !same_vertices(f->mesh(), motion.old_mesh()))
      throw ValidationError("field does not live on the motion's old mesh");
  }

  std::vector<InterpStats> stats(fields.size());
  const double base_step = pseudo_timestep(motion, options.resolved_cfl(D, r));
  for (std::size_t i = 0; i < fields.size(); ++i) {
    stats[i].dsigma_cfl = base_step;
    stats[i].dsigma_pp = std::numeric_limits<double>::infinity();
  }

  if (motion.is_identity()) {
    // the mesh does not move: a single trivial step, coefficients untouched
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (options.pp_limiter) {
        const LimiterReport rep = pp_limit(*fields[i], NegativeAveragePolicy::Error);
        stats[i].limited_cells += rep.limited_cells;
        stats[i].limit_applications += fields[i]->mesh().n_elements();
      }
      stats[i].mass_before = stats[i].mass_after = fields[i]->mass();
      stats[i].min_before = stats[i].min_after = fields[i]->min_at_pp_points();
      stats[i].n_steps = 1;
      fields[i]->set_mesh(motion.new_ptr());
    }
    return stats;
  }

  if (options.pp_limiter) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const LimiterReport rep = pp_limit(*fields[i], NegativeAveragePolicy::Error);
      stats[i].limited_cells += rep.limited_cells;
      stats[i].limit_applications += fields[i]->mesh().n_elements();
    }
  }
  for (std::size_t i = 0; i < fields.size(); ++i) {
    stats[i].mass_before = fields[i]->mass();
    stats[i].min_before = fields[i]->min_at_pp_points();
  }

  std::shared_ptr<const SimplicialMesh<D>> current = motion.old_ptr();
  double sigma = 0.0;
  int steps = 0;
  while (sigma < 1.0) {
    double dsigma = std::min(base_step, 1.0 - sigma);
    if (options.pp_limiter) {
      const double bound = pp_timestep_bound(motion, *current, r);
      if (steps == 0)
        for (auto& s : stats) s.dsigma_pp = bound;
      dsigma = std::min(dsigma, bound);
    }
    if (options.force_single_step) dsigma = 1.0 - sigma;
    advance_one_step(fields, motion, sigma, dsigma, current, options, &stats);
    sigma += dsigma;
    if (1.0 - sigma < 1e-14) sigma = 1.0;
    if (++steps > options.max_steps)
      throw NoConvergence("interpolation exceeded the step budget");
  }

  // land exactly on the new mesh object
  for (auto* f : fields) f->set_mesh(motion.new_ptr());
  for (std::size_t i = 0; i < fields.size(); ++i) {
    stats[i].n_steps = steps;
    stats[i].mass_after = fields[i]->mass();
    stats[i].min_after = fields[i]->min_at_pp_points();
  }
  return stats;
}

template <int D>
InterpStats interpolate(DGField<D>& field, const MeshMotion<D>& motion,
                        const InterpOptions& options) {
  std::vector<DGField<D>*> fields{&field};
  return interpolate_many<D>(std::move(fields), motion, options)[0];
}

template double pseudo_timestep<1>(const MeshMotion<1>&, double);
template double pseudo_timestep<2>(const MeshMotion<2>&, double);
template double pp_timestep_bound<1>(const MeshMotion<1>&, const SimplicialMesh<1>&, int);
template double pp_timestep_bound<2>(const MeshMotion<2>&, const SimplicialMesh<2>&, int);
template Eigen::MatrixXd spatial_residual<1>(const DGField<1>&, const SimplicialMesh<1>&,
                                             const MeshMotion<1>&);
template Eigen::MatrixXd spatial_residual<2>(const DGField<2>&, const SimplicialMesh<2>&,
                                             const MeshMotion<2>&);
template void rk_step<1>(DGField<1>&, const MeshMotion<1>&, double, double,
                         const InterpOptions&);
template void rk_step<2>(DGField<2>&, const MeshMotion<2>&, double, double,
                         const InterpOptions&);
template std::vector<InterpStats> interpolate_many<1>(std::vector<DGField<1>*>,
                                                      const MeshMotion<1>&,
                                                      const InterpOptions&);
template std::vector<InterpStats> interpolate_many<2>(std::vector<DGField<2>*>,
                                                      const MeshMotion<2>&,
                                                      const InterpOptions&);
template InterpStats interpolate<1>(DGField<1>&, const MeshMotion<1>&, const InterpOptions&);
template InterpStats interpolate<2>(DGField<2>&, const MeshMotion<2>&, const InterpOptions&);

}  // namespace dgremap

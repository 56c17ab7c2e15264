#include "dgremap/mmpde.hpp"

#include <cmath>
#include <sstream>

#include "dgremap/common.hpp"

namespace dgremap {

namespace {

template <int D>
double det(const Eigen::Matrix<double, D, D>& m) {
  if constexpr (D == 1)
    return m(0, 0);
  else
    return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
}

template <int D>
Eigen::Matrix<double, D, D> inverse(const Eigen::Matrix<double, D, D>& m, double d) {
  Eigen::Matrix<double, D, D> inv;
  if constexpr (D == 1) {
    (void)m;
    inv(0, 0) = 1.0 / d;
  } else {
    inv(0, 0) = m(1, 1) / d;
    inv(0, 1) = -m(0, 1) / d;
    inv(1, 0) = -m(1, 0) / d;
    inv(1, 1) = m(0, 0) / d;
  }
  return inv;
}

}  // namespace

template <int D>
MeshEnergyContext<D>::MeshEnergyContext(std::shared_ptr<const SimplicialMesh<D>> physical,
                                        MetricField<D> metric, double tau)
    : physical_(std::move(physical)), metric_(std::move(metric)), tau_(tau) {
  if (!(tau_ > 0.0)) throw ValidationError("tau must be positive");
  const int n_elem = physical_->n_elements();
  if (metric_.size() != n_elem)
    throw ValidationError("metric field does not match the mesh");
  edge_inv_.resize(n_elem);
  edge_det_.resize(n_elem);
  metric_inv_.resize(n_elem);
  metric_sqrt_det_.resize(n_elem);
  for (int e = 0; e < n_elem; ++e) {
    const AffineMap<D> map = physical_->affine_map(e);
    edge_det_(e) = map.determinant;
    edge_inv_[e] = map.inverse;
    const Mat& m = metric_.tensors[e];
    const double md = det<D>(m);
    if (!(md > 0.0)) throw ValidationError("metric tensor is not positive definite");
    metric_inv_[e] = inverse<D>(m, md);
    metric_sqrt_det_(e) = std::sqrt(md);
  }
  sigma_h_ = 0.0;
  for (int e = 0; e < n_elem; ++e) sigma_h_ += physical_->volume(e) * metric_sqrt_det_(e);

  vertex_sqrt_det_.resize(physical_->n_vertices());
  for (int i = 0; i < physical_->n_vertices(); ++i) {
    const auto& patch = physical_->topology().vertex_elements[i];
    Mat avg = Mat::Zero();
    for (int e : patch) avg += metric_.tensors[e];
    avg /= static_cast<double>(patch.size());
    vertex_sqrt_det_(i) = std::sqrt(det<D>(avg));
  }
}

template <int D>
double MeshEnergyContext<D>::computational_measure(const std::vector<Point>& xi) const {
  double total = 0.0;
  for (int e = 0; e < physical_->n_elements(); ++e)
    total += element_signed_volume<D>(xi, physical_->topology().elements[e]);
  return total;
}

template <int D>
void MeshEnergyContext<D>::element_terms(const std::vector<Point>& xi, int e,
                                         double* g_trace, double* g_det,
                                         std::array<Point, D + 1>* velocities) const {
  const auto& el = physical_->topology().elements[e];
  Mat edge_c;
  for (int k = 0; k < D; ++k) edge_c.col(k) = xi[el[k + 1]] - xi[el[0]];
  const Mat jac = edge_c * edge_inv_[e];  // J = E_{K_c} E_K^{-1}
  const double det_c = det<D>(edge_c);
  const double det_j = det_c / edge_det_(e);
  const Mat jm = jac * metric_inv_[e];
  const double trace = (jm * jac.transpose()).trace();
  const double sdm = metric_sqrt_det_(e);
  const double p = 0.75 * D;  // 3d/4
  const double dpow = std::pow(static_cast<double>(D), p);

  if (g_trace) *g_trace = (1.0 / 3.0) * sdm * std::pow(trace, p);
  if (g_det) *g_det = (dpow / 3.0) * sdm * std::pow(det_j / sdm, 1.5);

  if (velocities) {
    // dG/dJ = (d/2) sqrt(det M) trace^{3d/4-1} M^{-1} J^T
    const Mat dg_dj = (0.5 * D) * sdm * std::pow(trace, p - 1.0) *
                      (metric_inv_[e] * jac.transpose());
    // dG/ddet(J) = (1/2) d^{3d/4} det(M)^{-1/4} det(J)^{1/2}
    const double dg_ddet = 0.5 * dpow * std::pow(sdm, -0.5) * std::sqrt(det_j);
    const Mat edge_c_inv = inverse<D>(edge_c, det_c);
    Mat rows = -edge_inv_[e] * dg_dj - dg_ddet * det_j * edge_c_inv;
    std::array<Point, D + 1>& v = *velocities;
    v[0] = Point::Zero();
    for (int k = 0; k < D; ++k) {
      v[k + 1] = rows.row(k).transpose();
      v[0] -= v[k + 1];
    }
  }
}

template <int D>
typename MeshEnergyContext<D>::EnergyBreakdown MeshEnergyContext<D>::energy(
    const std::vector<Point>& xi) const {
  EnergyBreakdown sum;
  for (int e = 0; e < physical_->n_elements(); ++e) {
    double gt = 0.0, gd = 0.0;
    element_terms(xi, e, &gt, &gd, nullptr);
    const double vol = physical_->volume(e);
    sum.trace_term += vol * gt;
    sum.determinant_term += vol * gd;
  }
  return sum;
}

template <int D>
std::array<typename MeshEnergyContext<D>::Point, D + 1>
MeshEnergyContext<D>::local_velocities(const std::vector<Point>& xi, int e) const {
  const auto& el = physical_->topology().elements[e];
  Mat edge_c;
  for (int k = 0; k < D; ++k) edge_c.col(k) = xi[el[k + 1]] - xi[el[0]];
  if (!(det<D>(edge_c) > 0.0))
    throw DegenerateElement("computational element has nonpositive volume", e);
  std::array<Point, D + 1> v;
  element_terms(xi, e, nullptr, nullptr, &v);
  return v;
}

template <int D>
std::vector<typename MeshEnergyContext<D>::Point> MeshEnergyContext<D>::assembled_gradient(
    const std::vector<Point>& xi, int threads) const {
  const int n_elem = physical_->n_elements();
  std::vector<std::array<Point, D + 1>> local(n_elem);
  parallel_for(n_elem, threads, [&](int e) {
    element_terms(xi, e, nullptr, nullptr, &local[e]);
  });
  const int n_v = physical_->n_vertices();
  std::vector<Point> grad(n_v);
  parallel_for(n_v, threads, [&](int i) {
    Point g = Point::Zero();
    for (int e : physical_->topology().vertex_elements[i]) {
      const auto& el = physical_->topology().elements[e];
      int local_index = 0;
      for (int k = 0; k <= D; ++k)
        if (el[k] == i) local_index = k;
      g += physical_->volume(e) * local[e][local_index];
    }
    grad[i] = g;
  });
  return grad;
}

template <int D>
std::vector<typename MeshEnergyContext<D>::Point> MeshEnergyContext<D>::ode_rhs(
    const std::vector<Point>& xi, const SimplicialMesh<D>& reference, int threads) const {
  std::vector<Point> rhs = assembled_gradient(xi, threads);
  const int n_v = physical_->n_vertices();
  for (int i = 0; i < n_v; ++i) {
    const BoundaryMarker marker = physical_->marker(i);
    if (marker == BoundaryMarker::Corner) {
      rhs[i].setZero();
      continue;
    }
    rhs[i] *= vertex_sqrt_det_(i) / tau_;
    if (marker == BoundaryMarker::Boundary) {
      if constexpr (D == 1) {
        rhs[i].setZero();
      } else {
        const auto& t = reference.boundary_tangent(i);
        rhs[i] = t * t.dot(rhs[i]);
      }
    }
  }
  return rhs;
}

template <int D>
bool MeshEnergyContext<D>::valid(const std::vector<Point>& xi) const {
  for (int e = 0; e < physical_->n_elements(); ++e)
    if (!(element_signed_volume<D>(xi, physical_->topology().elements[e]) > 0.0))
      return false;
  return true;
}

namespace {

// adaptive explicit Euler for the mesh gradient flow
template <int D>
MmpdeSweepInfo integrate_flow(const MeshEnergyContext<D>& ctx,
                              const SimplicialMesh<D>& reference,
                              std::vector<typename MeshEnergyContext<D>::Point>& xi,
                              const MmpdeOptions& options) {
  using Point = typename MeshEnergyContext<D>::Point;
  MmpdeSweepInfo info;
  double energy = ctx.energy(xi).total();
  info.energy_start = energy;
  double scale = 0.0;
  for (const auto& p : xi) scale = std::max(scale, p.norm());
  scale = std::max(scale, 1.0);

  // shortest reference edge sets the initial trial step
  double h_min = std::numeric_limits<double>::infinity();
  for (int e = 0; e < reference.n_elements(); ++e)
    h_min = std::min(h_min, reference.element_height(e));

  double s = 0.0;
  double dt = -1.0;
  int guard = options.max_substeps;
  while (s < options.horizon && guard-- > 0) {
    const auto rhs = ctx.ode_rhs(xi, reference, options.threads);
    double vmax = 0.0;
    for (const auto& v : rhs) vmax = std::max(vmax, v.norm());
    if (vmax * (options.horizon - s) < 1e-13 * scale) {
      // stationary flow: the remaining span moves nothing measurable
      s = options.horizon;
      break;
    }
    if (dt < 0.0) dt = std::min(options.horizon, 0.2 * h_min / vmax);
    dt = std::min(dt, options.horizon - s);
    bool accepted = false;
    while (guard-- > 0) {
      std::vector<Point> trial(xi.size());
      for (std::size_t i = 0; i < xi.size(); ++i) trial[i] = xi[i] + dt * rhs[i];
      if (ctx.valid(trial)) {
        const double trial_energy = ctx.energy(trial).total();
        if (trial_energy <= energy + 1e-12 * std::abs(energy)) {
          xi = std::move(trial);
          energy = trial_energy;
          s += dt;
          dt *= 1.7;
          ++info.accepted_steps;
          accepted = true;
          break;
        }
      }
      dt *= 0.4;
      ++info.rejected_steps;
      if (dt < 1e-13 * options.horizon) break;
    }
    if (!accepted) {
      // cannot descend further within round-off
      s = options.horizon;
      break;
    }
  }
  if (guard <= 0)
    throw NoConvergence("mesh flow exceeded the substep budget");
  info.energy_end = energy;
  info.reached = s;
  return info;
}

}  // namespace

template <int D>
std::shared_ptr<const SimplicialMesh<D>> move_mesh(
    std::shared_ptr<const SimplicialMesh<D>> physical,
    std::shared_ptr<const SimplicialMesh<D>> reference, const MetricProvider<D>& provider,
    const MmpdeOptions& options, MmpdeDiagnostics* diagnostics) {
  using Point = typename SimplicialMesh<D>::Point;
  if (physical->topology().elements != reference->topology().elements)
    throw ValidationError("physical and reference meshes must share connectivity");
  auto current = std::move(physical);
  for (int sweep = 0; sweep < options.sweeps; ++sweep) {
    MeshEnergyContext<D> ctx(current, provider(*current), options.tau);
    std::vector<Point> xi = reference->vertices();
    const MmpdeSweepInfo info = integrate_flow<D>(ctx, *reference, xi, options);
    if (diagnostics) diagnostics->sweeps.push_back(info);

    // Phi_h maps the flowed computational mesh onto the fixed physical mesh;
    // evaluating it at the reference vertices yields the new physical mesh
    const SimplicialMesh<D> comp_new(reference->topology_ptr(), xi);
    std::vector<Point> new_vertices(current->n_vertices());
    for (int i = 0; i < current->n_vertices(); ++i) {
      if (current->marker(i) == BoundaryMarker::Corner) {
        new_vertices[i] = current->vertex(i);
        continue;
      }
      const int seed = reference->topology().vertex_elements[i].front();
      const auto [e, lambda] = comp_new.locate(reference->vertex(i), seed);
      Point x = Point::Zero();
      const auto& el = current->topology().elements[e];
      for (int k = 0; k <= D; ++k) x += lambda(k) * current->vertex(el[k]);
      if (current->marker(i) == BoundaryMarker::Boundary) {
        if constexpr (D == 2) {
          // remove normal drift so boundary vertices stay on their side
          const auto& t = current->boundary_tangent(i);
          const Point base = current->vertex(i);
          x = base + t * t.dot(x - base);
        }
      }
      new_vertices[i] = x;
    }
    try {
      current = std::make_shared<const SimplicialMesh<D>>(current->topology_ptr(),
                                                          std::move(new_vertices));
    } catch (const DegenerateElement& err) {
      std::ostringstream os;
      os << "mesh movement produced a tangled physical mesh in sweep " << sweep << ": "
         << err.what();
      throw DegenerateElement(os.str(), err.element);
    }
  }
  return current;
}

template <int D>
std::shared_ptr<const SimplicialMesh<D>> move_mesh(
    std::shared_ptr<const SimplicialMesh<D>> physical,
    std::shared_ptr<const SimplicialMesh<D>> reference, const MetricField<D>& metric,
    const MmpdeOptions& options, MmpdeDiagnostics* diagnostics) {
  if (options.sweeps != 1)
    throw ValidationError("a fixed metric implies a single sweep");
  MetricProvider<D> provider = [&metric](const SimplicialMesh<D>&) { return metric; };
  return move_mesh<D>(std::move(physical), std::move(reference), provider, options,
                      diagnostics);
}

template <int D>
double equidistribution_spread(const SimplicialMesh<D>& mesh, const MetricField<D>& metric) {
  const int n = mesh.n_elements();
  Eigen::VectorXd load(n);
  for (int e = 0; e < n; ++e) {
    double md;
    if constexpr (D == 1)
      md = metric.tensors[e](0, 0);
    else
      md = metric.tensors[e].determinant();
    load(e) = mesh.volume(e) * std::sqrt(md);
  }
  const double mean = load.mean();
  return std::sqrt((load.array() - mean).square().sum() / n);
}

template class MeshEnergyContext<1>;
template class MeshEnergyContext<2>;
template std::shared_ptr<const SimplicialMesh<1>> move_mesh<1>(
    std::shared_ptr<const SimplicialMesh<1>>, std::shared_ptr<const SimplicialMesh<1>>,
    const MetricProvider<1>&, const MmpdeOptions&, MmpdeDiagnostics*);
template std::shared_ptr<const SimplicialMesh<2>> move_mesh<2>(
    std::shared_ptr<const SimplicialMesh<2>>, std::shared_ptr<const SimplicialMesh<2>>,
    const MetricProvider<2>&, const MmpdeOptions&, MmpdeDiagnostics*);
template std::shared_ptr<const SimplicialMesh<1>> move_mesh<1>(
    std::shared_ptr<const SimplicialMesh<1>>, std::shared_ptr<const SimplicialMesh<1>>,
    const MetricField<1>&, const MmpdeOptions&, MmpdeDiagnostics*);
template std::shared_ptr<const SimplicialMesh<2>> move_mesh<2>(
    std::shared_ptr<const SimplicialMesh<2>>, std::shared_ptr<const SimplicialMesh<2>>,
    const MetricField<2>&, const MmpdeOptions&, MmpdeDiagnostics*);
template double equidistribution_spread<1>(const SimplicialMesh<1>&, const MetricField<1>&);
template double equidistribution_spread<2>(const SimplicialMesh<2>&, const MetricField<2>&);

}  // namespace dgremap

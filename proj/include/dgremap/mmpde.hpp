// Moving-mesh generator: gradient flow of the equidistribution/alignment
// mesh energy over a computational mesh, with the new physical mesh obtained
// through the correspondence with the reference computational mesh.
#pragma once

#include <functional>
#include <memory>

#include "dgremap/metric.hpp"

namespace dgremap {

// Fixed data of the mesh energy: the physical mesh T_h (held fixed during the
// flow), the metric on it, and the relaxation parameter tau.  The unknowns
// are the computational vertices xi.
template <int D>
class MeshEnergyContext {
 public:
  using Point = Eigen::Matrix<double, D, 1>;
  using Mat = Eigen::Matrix<double, D, D>;

  MeshEnergyContext(std::shared_ptr<const SimplicialMesh<D>> physical,
                    MetricField<D> metric, double tau);

  const SimplicialMesh<D>& physical() const { return *physical_; }
  double tau() const { return tau_; }
  const MetricField<D>& metric() const { return metric_; }

  // normalizers of the equidistribution condition
  double sigma_h() const { return sigma_h_; }
  double computational_measure(const std::vector<Point>& xi) const;

  struct EnergyBreakdown {
    double trace_term = 0.0;
    double determinant_term = 0.0;
    double total() const { return trace_term + determinant_term; }
  };

  // the mesh energy for computational vertices xi (same connectivity as T_h)
  EnergyBreakdown energy(const std::vector<Point>& xi) const;

  // local velocities v_0..v_d contributed by element e (in xi space)
  std::array<Point, D + 1> local_velocities(const std::vector<Point>& xi, int e) const;

  // patch-assembled gradient sum_K |K| v^K_i per vertex (no boundary rules,
  // no metric/tau scaling); equals -dI_h/dxi_i
  std::vector<Point> assembled_gradient(const std::vector<Point>& xi,
                                        int threads = 1) const;

  // right side of the mesh equation dxi/dsigma, with corner velocities zeroed
  // and boundary velocities projected on the boundary tangent (tangents taken
  // from the given reference mesh)
  std::vector<Point> ode_rhs(const std::vector<Point>& xi,
                             const SimplicialMesh<D>& reference, int threads = 1) const;

  // true when every computational element has positive volume
  bool valid(const std::vector<Point>& xi) const;

 private:
  std::shared_ptr<const SimplicialMesh<D>> physical_;
  MetricField<D> metric_;
  double tau_;
  double sigma_h_ = 0.0;
  // cached per element
  std::vector<Mat> edge_inv_;        // E_K^{-1}
  Eigen::VectorXd edge_det_;         // det E_K
  std::vector<Mat> metric_inv_;      // M_K^{-1}
  Eigen::VectorXd metric_sqrt_det_;  // det(M_K)^{1/2}
  // cached per vertex: det(M(x_i))^{1/2} with M(x_i) the incident average
  Eigen::VectorXd vertex_sqrt_det_;

  void element_terms(const std::vector<Point>& xi, int e, double* g_trace, double* g_det,
                     std::array<Point, D + 1>* velocities) const;
};

struct MmpdeOptions {
  double tau = 0.01;
  double horizon = 1.0;  // pseudo-time span of each sweep
  int sweeps = 5;
  int max_substeps = 500000;
  int threads = 1;
};

struct MmpdeSweepInfo {
  double energy_start = 0.0;
  double energy_end = 0.0;
  int accepted_steps = 0;
  int rejected_steps = 0;
  double reached = 0.0;  // integrated pseudo-time (== horizon unless stationary)
};

struct MmpdeDiagnostics {
  std::vector<MmpdeSweepInfo> sweeps;
};

// One metric field per call, evaluated on the current physical mesh.
template <int D>
using MetricProvider = std::function<MetricField<D>(const SimplicialMesh<D>&)>;

// Integrates the mesh equation from the reference computational mesh over the
// horizon (adaptive explicit Euler, step halved on energy increase or element
// inversion) and maps the reference vertices through the resulting
// correspondence; repeated `sweeps` times with the metric recomputed each
// sweep.  Output connectivity matches the input; the output mesh is validated
// nonsingular.
template <int D>
std::shared_ptr<const SimplicialMesh<D>> move_mesh(
    std::shared_ptr<const SimplicialMesh<D>> physical,
    std::shared_ptr<const SimplicialMesh<D>> reference, const MetricProvider<D>& provider,
    const MmpdeOptions& options, MmpdeDiagnostics* diagnostics = nullptr);

// Single-metric convenience overload (one sweep with a fixed metric).
template <int D>
std::shared_ptr<const SimplicialMesh<D>> move_mesh(
    std::shared_ptr<const SimplicialMesh<D>> physical,
    std::shared_ptr<const SimplicialMesh<D>> reference, const MetricField<D>& metric,
    const MmpdeOptions& options, MmpdeDiagnostics* diagnostics = nullptr);

// standard deviation of |K| sqrt(det M_K) over the mesh (equidistribution
// monitor)
template <int D>
double equidistribution_spread(const SimplicialMesh<D>& mesh, const MetricField<D>& metric);

}  // namespace dgremap

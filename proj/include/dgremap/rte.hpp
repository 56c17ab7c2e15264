// Discrete-ordinates DG solver for the radiative transfer equation on a
// fixed mesh per time step: backward Euler in time, upwind DG in space,
// source iteration over the scattering coupling, optional positivity limiter.
#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "dgremap/angular.hpp"
#include "dgremap/field.hpp"
#include "dgremap/limiter.hpp"

namespace dgremap {

// A spatial coefficient that may be a constant (enabling exact mass-matrix
// shortcuts) or a general function.
template <int D>
struct SpatialCoeff {
  using Point = Eigen::Matrix<double, D, 1>;
  std::function<double(const Point&)> fn;
  std::optional<double> constant;

  static SpatialCoeff constant_value(double v) {
    SpatialCoeff c;
    c.constant = v;
    return c;
  }
  static SpatialCoeff function(std::function<double(const Point&)> f) {
    SpatialCoeff c;
    c.fn = std::move(f);
    return c;
  }
  double operator()(const Point& x) const { return constant ? *constant : fn(x); }
  bool is_zero() const { return constant && *constant == 0.0; }
};

template <int D>
struct RteConfig {
  using Point = Eigen::Matrix<double, D, 1>;
  using Direction = Eigen::Matrix<double, D, 1>;

  double c = 3.0e8;  // photon speed
  SpatialCoeff<D> sigma_t = SpatialCoeff<D>::constant_value(0.0);
  SpatialCoeff<D> sigma_s = SpatialCoeff<D>::constant_value(0.0);

  // volumetric source q(x, Omega, t); null means zero
  std::function<double(const Point&, const Direction&, double)> source;
  // optional separable form sum_k spatial_k(x,t) angular_k(Omega); preferred
  // over `source` when non-empty (one spatial sweep shared by all directions)
  struct SeparableTerm {
    std::function<double(const Point&, double)> spatial;
    std::function<double(const Direction&)> angular;
  };
  std::vector<SeparableTerm> separable_source;

  // inflow boundary value I_b(x, Omega, t); null means zero
  std::function<double(const Point&, const Direction&, double)> inflow;
  // initial condition I_0(x, Omega)
  std::function<double(const Point&, const Direction&)> initial;

  double dt = 2e-4;
  double final_time = 0.1;
  int degree = 2;
  AngularQuadrature<D> angles;
  double si_tolerance = 1e-12;
  int si_max_iterations = 10000;
  bool pp_limiter = true;
  bool jacobi = false;         // Jacobi source iteration instead of Gauss-Seidel
  bool force_coupled = false;  // always use the global per-direction solve
  int threads = 1;

  void validate() const;
};

// Per-direction intensity fields sharing one mesh.
template <int D>
struct RadiativeState {
  std::vector<DGField<D>> intensities;
  double time = 0.0;

  const SimplicialMesh<D>& mesh() const { return intensities.front().mesh(); }
  std::shared_ptr<const SimplicialMesh<D>> mesh_ptr() const {
    return intensities.front().mesh_ptr();
  }
  // scalar flux sum_m w_m I_m
  DGField<D> scalar_flux(const AngularQuadrature<D>& angles) const;
  // minimum over all directions of the limiter point-set values
  double min_at_pp_points() const;
};

// L2 projection of the initial condition per direction (limited when the
// limiter is enabled).
template <int D>
RadiativeState<D> initial_state(const RteConfig<D>& config,
                                std::shared_ptr<const SimplicialMesh<D>> mesh);

// Backward-Euler effective coefficients: sigma_tilde = sigma_t + 1/(c dt) and
// q_tilde_m(x) = q(x, Omega_m, t_next) + I_m_prev(x)/(c dt).
template <int D>
struct EffectiveCoeffs {
  using Point = Eigen::Matrix<double, D, 1>;
  double shift = 0.0;  // 1/(c dt)
  std::function<double(const Point&)> sigma_tilde;
  // evaluate q_tilde for direction m at a point inside element e
  std::function<double(const Point&, int, int)> q_tilde;
};

template <int D>
EffectiveCoeffs<D> effective_coeffs(const RteConfig<D>& config,
                                    const RadiativeState<D>& previous);

// Upwind element ordering for one direction: every element is solved after
// its inflow neighbors.  Throws CyclicDependency when no such order exists.
template <int D>
std::vector<int> sweep_order(const SimplicialMesh<D>& mesh,
                             const Eigen::Matrix<double, D, 1>& direction);

struct SourceIterationReport {
  int iterations = 0;
  double final_update = 0.0;
  std::vector<double> update_history;
  long limited_cells = 0;
  long negative_average_cells = 0;
  double worst_average = 0.0;
  bool used_coupled_fallback = false;

  bool monotone_after_first() const {
    for (std::size_t k = 2; k < update_history.size(); ++k)
      if (update_history[k] > update_history[k - 1]) return false;
    return true;
  }
};

// One-step solver bound to a mesh; factorizations persist across steps on a
// fixed mesh.
template <int D>
class RteSolver {
 public:
  RteSolver(std::shared_ptr<const SimplicialMesh<D>> mesh, const RteConfig<D>& config);
  ~RteSolver();
  RteSolver(RteSolver&&) noexcept;

  // advances state from state.time to state.time + dt; the state must live on
  // the solver's mesh and already be remapped to it
  SourceIterationReport step(RadiativeState<D>& state);

  // direct dense solve of one element's local system (test oracle access)
  Eigen::VectorXd local_solve_dense(int element, int direction,
                                    const RadiativeState<D>& state,
                                    const DGField<D>& scalar_flux, double t_next) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Convenience wrapper: build a transient solver and take one step.
template <int D>
SourceIterationReport rte_step(RadiativeState<D>& state, const RteConfig<D>& config);

}  // namespace dgremap

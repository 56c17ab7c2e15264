// Conservative DG interpolation between deforming meshes: the semi-discrete
// moving-mesh DG scheme with local Lax-Friedrichs flux, TVD Runge-Kutta
// pseudo-time stepping, GCL-consistent element volumes, CFL control, and the
// positivity limiter.
#pragma once

#include <vector>

#include "dgremap/field.hpp"
#include "dgremap/limiter.hpp"

namespace dgremap {

enum class TimeScheme { Euler, RK2, RK3 };
enum class VolumeUpdate { GCL, Geometric };

double default_cfl(int dim, int r);

struct InterpOptions {
  double cfl = 0.0;  // <=0 selects the default for (dim, r)
  bool pp_limiter = false;
  TimeScheme scheme = TimeScheme::RK3;
  VolumeUpdate volume_update = VolumeUpdate::GCL;
  int threads = 1;
  int max_steps = 1000000;
  bool force_single_step = false;  // one-step regression mode

  void validate(int dim, int r) const;
  double resolved_cfl(int dim, int r) const { return cfl > 0.0 ? cfl : default_cfl(dim, r); }
};

struct InterpStats {
  int n_steps = 0;
  double mass_before = 0.0, mass_after = 0.0;
  double min_before = 0.0, min_after = 0.0;  // over the limiter point set
  long limited_cells = 0;       // limit events (cell x application)
  long limit_applications = 0;  // number of limiter sweeps over the mesh
  double dsigma_cfl = 0.0;      // stability step bound
  double dsigma_pp = 0.0;       // positivity step bound at sigma=0 (inf if off)

  double limited_fraction() const {
    return limit_applications > 0
               ? static_cast<double>(limited_cells) / static_cast<double>(limit_applications)
               : 0.0;
  }
  std::string to_csv_header() const;
};

// Local Lax-Friedrichs flux F approximating -u Xdot . n on a facet.
inline double llf_flux(double u_in, double u_out, double edge_normal_velocity,
                       double alpha) {
  return 0.5 * ((-u_in - u_out) * edge_normal_velocity - alpha * (u_out - u_in));
}

// Stability pseudo-time step: cfl * min(h_min_old, h_min_new) / max |Xdot.n|.
// Returns 1 when the mesh does not move (one step suffices).
template <int D>
double pseudo_timestep(const MeshMotion<D>& motion, double cfl);

// Positivity-preserving step bound (2/3) w1_hat min(|K|/|dK|) / max |Xdot.n|
// evaluated on the given stage mesh; clamped to 1 for zero velocity.
template <int D>
double pp_timestep_bound(const MeshMotion<D>& motion, const SimplicialMesh<D>& stage_mesh,
                         int r);

// GCL volume update over one RK3 step: the three stage volumes from the
// divergence of the mesh velocity on the three stage elements.
struct StageVolumes {
  double v1, v2, v3;
};
StageVolumes volume_update(double v0, double div0, double div1, double div_half,
                           double dsigma, int element = -1);

// A(u, v)|_K for every element and modal test function of the field's degree,
// evaluated with the stage mesh geometry (N x n_b).
template <int D>
Eigen::MatrixXd spatial_residual(const DGField<D>& field,
                                 const SimplicialMesh<D>& mesh_at_stage,
                                 const MeshMotion<D>& motion);

// One step of the chosen scheme from sigma over dsigma; updates the field
// coefficients, tracked volumes, and mesh binding in place.  The field must
// live on the sigma-mesh of the motion.
template <int D>
void rk_step(DGField<D>& field, const MeshMotion<D>& motion, double sigma, double dsigma,
             const InterpOptions& options);

// Marches the field(s) from the old mesh to the new one.  All fields share
// the pseudo-time schedule; one stats record per field.
template <int D>
std::vector<InterpStats> interpolate_many(std::vector<DGField<D>*> fields,
                                          const MeshMotion<D>& motion,
                                          const InterpOptions& options);

template <int D>
InterpStats interpolate(DGField<D>& field, const MeshMotion<D>& motion,
                        const InterpOptions& options);

}  // namespace dgremap

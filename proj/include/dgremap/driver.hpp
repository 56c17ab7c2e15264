// Experiment orchestration: the rezoning loop (mesh movement, conservative
// remap, transport solve), the interpolation studies, error norms, and
// convergence/cost reporting.
#pragma once

#include <optional>
#include <string>

#include "dgremap/delaunay.hpp"
#include "dgremap/interp.hpp"
#include "dgremap/mmpde.hpp"
#include "dgremap/rte.hpp"

namespace dgremap {

enum class ExperimentId { Interp1dEx1, Interp2dEx2, Rte1dEx3, Rte2dEx4, Rte2dEx5 };

enum class DtPolicy { Fixed, HalfMinH, TenthMinH };

ExperimentId experiment_from_name(const std::string& name);  // "ex1".."ex5"
std::string experiment_name(ExperimentId id);

struct ExperimentSpec {
  ExperimentId id = ExperimentId::Interp1dEx1;
  std::vector<int> resolutions;  // element counts, strictly increasing
  int degree = 2;
  bool pp_limiter = true;
  std::vector<unsigned> seeds = {1};  // one run per seed (randomized meshes)
  double tau = 0.01;
  int sweeps = 5;
  double cfl = 0.0;  // 0 = default for (dim, degree)
  TimeScheme scheme = TimeScheme::RK3;
  // transport parameters
  double dt = 2e-4;
  double final_time = 0.1;
  DtPolicy dt_policy = DtPolicy::Fixed;
  bool moving_mesh = true;
  bool full_intersection = false;
  int angles_1d = 8;
  int angles_nl = 8, angles_nc = 8;
  int threads = 1;
  std::string out_dir;  // when set, experiment artifacts are written here

  void validate() const;
};

// Default specs with the published coefficients baked in.
ExperimentSpec ex1_spec();
ExperimentSpec ex2_spec();
ExperimentSpec ex3_spec();
ExperimentSpec ex4_spec();
ExperimentSpec ex5_spec();

struct RunRecord {
  int resolution = 0;
  unsigned seed = 0;
  double l1_error = std::numeric_limits<double>::quiet_NaN();
  double linf_error = std::numeric_limits<double>::quiet_NaN();
  double l1_final = std::numeric_limits<double>::quiet_NaN();
  double linf_final = std::numeric_limits<double>::quiet_NaN();
  double nsigma_avg = 0.0;       // pseudo-time steps per remap (mean over steps)
  double nsigma_last = 0.0;
  double limited_percent = 0.0;  // limiter activity in the transport solve
  double remap_limited_percent = 0.0;
  double si_iterations_avg = 0.0;
  double si_final_update_max = 0.0;
  double min_value = std::numeric_limits<double>::infinity();  // over G_K, run-wide
  double mass_drift_max = 0.0;  // relative remap conservation drift
  double max_displacement = 0.0;
  double min_h = 0.0;
  int steps = 0;
  double wall_seconds = 0.0;
};

struct ErrorReport {
  ExperimentSpec spec;
  std::vector<RunRecord> runs;

  // geometric mean of errors over the seeds at one resolution
  double mean_l1(int resolution) const;
  double mean_linf(int resolution) const;
  // orders log2(e_coarse/e_fine) between consecutive resolutions (dyadic in h)
  std::vector<double> l1_orders() const;
  std::vector<double> linf_orders() const;
  // least-squares slope of log e vs log h, h = N^{-1/dim}
  double l1_slope(int dim) const;
  double linf_slope(int dim) const;

  std::string to_csv() const;
  std::string to_table(int dim) const;
};

// Exact solution description for error norms; either generic or in the
// separable form angular(Omega) * spatial(x, t) + offset(t).
template <int D>
struct ExactSolution {
  using Point = Eigen::Matrix<double, D, 1>;
  using Direction = Eigen::Matrix<double, D, 1>;
  std::function<double(const Point&, const Direction&, double)> generic;
  std::function<double(const Point&, double)> spatial;
  std::function<double(const Direction&)> angular;
  std::function<double(double)> offset;

  bool separable() const { return static_cast<bool>(spatial); }
};

// Angular-weighted L1 and max-norm of the state error at state.time.
template <int D>
std::pair<double, double> error_norms(const RadiativeState<D>& state,
                                      const ExactSolution<D>& exact,
                                      const AngularQuadrature<D>& angles);

// Spatial norms of a single field against an analytic function.
template <int D>
std::pair<double, double> field_error_norms(
    const DGField<D>& field,
    const std::function<double(const Eigen::Matrix<double, D, 1>&)>& exact);

// Evaluate a field at a list of physical points (PointNotFound outside).
template <int D>
std::vector<double> sample_field(const DGField<D>& field,
                                 const std::vector<Eigen::Matrix<double, D, 1>>& points);

// Point-set discrepancy table between two samplings (Fig-style line cuts).
std::string discrepancy_csv(const std::vector<double>& coordinate,
                            const std::vector<double>& coarse,
                            const std::vector<double>& reference);

ErrorReport run_interp_experiment(const ExperimentSpec& spec);
ErrorReport run_rte_experiment(const ExperimentSpec& spec);

// Interpolation-study internals reused by tests and the cost-law checks.
struct InterpRunResult {
  std::shared_ptr<const SimplicialMesh<1>> old_mesh_1d, new_mesh_1d;
  std::shared_ptr<const SimplicialMesh<2>> old_mesh_2d, new_mesh_2d;
  InterpStats stats;
  double l1 = 0.0, linf = 0.0;
  double min_after = 0.0;
  double max_displacement = 0.0;
  double min_h = 0.0;
};
InterpRunResult run_interp_single(const ExperimentSpec& spec, int resolution,
                                  unsigned seed);

}  // namespace dgremap

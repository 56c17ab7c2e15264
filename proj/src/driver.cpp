#include "dgremap/driver.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "dgremap/mesh_io.hpp"

namespace dgremap {

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

template <int D>
const QuadratureRule& error_rule(int r) {
  static std::map<int, QuadratureRule> cache;
  auto it = cache.find(r);
  if (it == cache.end()) {
    QuadratureRule rule;
    if constexpr (D == 1)
      rule = gauss_legendre_unit(r + 3);
    else
      rule = triangle_quadrature(6);
    it = cache.emplace(r, std::move(rule)).first;
  }
  return it->second;
}

}  // namespace

ExperimentId experiment_from_name(const std::string& name) {
  if (name == "ex1") return ExperimentId::Interp1dEx1;
  if (name == "ex2") return ExperimentId::Interp2dEx2;
  if (name == "ex3") return ExperimentId::Rte1dEx3;
  if (name == "ex4") return ExperimentId::Rte2dEx4;
  if (name == "ex5") return ExperimentId::Rte2dEx5;
  throw ValidationError("unknown experiment '" + name + "' (expected ex1..ex5)");
}

std::string experiment_name(ExperimentId id) {
  switch (id) {
    case ExperimentId::Interp1dEx1: return "ex1";
    case ExperimentId::Interp2dEx2: return "ex2";
    case ExperimentId::Rte1dEx3: return "ex3";
    case ExperimentId::Rte2dEx4: return "ex4";
    case ExperimentId::Rte2dEx5: return "ex5";
  }
  return "?";
}

void ExperimentSpec::validate() const {
  std::vector<std::string> problems;
  if (resolutions.empty()) problems.push_back("no resolutions given");
  for (std::size_t k = 1; k < resolutions.size(); ++k)
    if (resolutions[k] <= resolutions[k - 1])
      problems.push_back("resolutions must be strictly increasing");
  for (int n : resolutions)
    if (n < 1) problems.push_back("resolutions must be positive");
  if (degree < 1 || degree > 2) problems.push_back("degree must be 1 or 2");
  if (cfl < 0.0 || cfl > 1.0) problems.push_back("cfl must lie in (0, 1]");
  if (!(tau > 0.0)) problems.push_back("tau must be positive");
  if (sweeps < 0) problems.push_back("sweeps must be nonnegative");
  if (!(dt > 0.0)) problems.push_back("dt must be positive");
  if (!(final_time > 0.0)) problems.push_back("final time must be positive");
  if (seeds.empty()) problems.push_back("at least one seed is required");
  if (threads < 1) problems.push_back("threads must be >= 1");
  if (!problems.empty()) throw ValidationError(problems);
}

ExperimentSpec ex1_spec() {
  ExperimentSpec spec;
  spec.id = ExperimentId::Interp1dEx1;
  spec.resolutions = {40, 80, 160, 320, 640};
  spec.degree = 2;
  spec.pp_limiter = true;
  spec.tau = 0.01;
  spec.sweeps = 5;
  return spec;
}

ExperimentSpec ex2_spec() {
  ExperimentSpec spec;
  spec.id = ExperimentId::Interp2dEx2;
  spec.resolutions = {1600, 6400, 25600};
  spec.degree = 2;
  spec.pp_limiter = true;
  spec.seeds = {1, 2, 3, 4, 5};
  return spec;
}

ExperimentSpec ex3_spec() {
  ExperimentSpec spec;
  spec.id = ExperimentId::Rte1dEx3;
  spec.resolutions = {40};
  spec.degree = 2;
  spec.dt = 2e-4;
  spec.final_time = 0.1;
  return spec;
}

ExperimentSpec ex4_spec() {
  ExperimentSpec spec;
  spec.id = ExperimentId::Rte2dEx4;
  spec.resolutions = {1600, 6400};
  spec.degree = 2;
  spec.dt = 2e-4;
  spec.final_time = 0.1;
  return spec;
}

ExperimentSpec ex5_spec() {
  ExperimentSpec spec;
  spec.id = ExperimentId::Rte2dEx5;
  spec.resolutions = {1600, 6400};
  spec.degree = 2;
  spec.dt = 2e-4;
  spec.final_time = 0.1;
  return spec;
}

// ---------------------------------------------------------------------------
// analytic data of the studies

namespace {

double ex1_function(double x) {
  const double c = std::cos(M_PI * x);
  return c * c + 1e-14;
}

double ex2_function(double x, double y) {
  const double r2 = (x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5);
  return 1.0 - std::tanh(50.0 * (r2 - 1.0 / 16.0)) + 1e-14;
}

int square4_n_from_elements(int n_elements) {
  const int n = static_cast<int>(std::lround(std::sqrt(n_elements / 4.0)));
  if (4 * n * n != n_elements)
    throw ValidationError("2D resolutions must be of the form 4 n^2 (got " +
                          std::to_string(n_elements) + ")");
  return n;
}

}  // namespace

// ---------------------------------------------------------------------------
// error norms

template <int D>
std::pair<double, double> error_norms(const RadiativeState<D>& state,
                                      const ExactSolution<D>& exact,
                                      const AngularQuadrature<D>& angles) {
  const auto& mesh = state.mesh();
  const int r = state.intensities.front().degree();
  const auto& rule = error_rule<D>(r);
  static std::map<int, Eigen::MatrixXd> phi_cache;
  auto it = phi_cache.find(r + 1000 * D);
  if (it == phi_cache.end())
    it = phi_cache.emplace(r + 1000 * D, reference_basis<D>(r).tabulate(rule.points)).first;
  const Eigen::MatrixXd& phi = it->second;
  const int n_b = reference_basis<D>(r).size();
  const int n_dir = angles.size();
  const double t = state.time;

  std::vector<double> gvals(n_dir);
  if (exact.separable())
    for (int m = 0; m < n_dir; ++m) gvals[m] = exact.angular(angles.directions[m]);
  const double offset = exact.separable() && exact.offset ? exact.offset(t) : 0.0;

  double l1 = 0.0, linf = 0.0;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const AffineMap<D> map = mesh.affine_map(e);
    for (int q = 0; q < rule.size(); ++q) {
      Eigen::Matrix<double, D, 1> ref;
      for (int d = 0; d < D; ++d) ref(d) = rule.points(q, d);
      const auto x = map.to_physical(ref);
      const double svals = exact.separable() ? exact.spatial(x, t) : 0.0;
      const double wq = rule.weights(q) * map.determinant;
      for (int m = 0; m < n_dir; ++m) {
        double num = 0.0;
        const auto& coeffs = state.intensities[m].coeffs();
        for (int j = 0; j < n_b; ++j) num += coeffs(e, j) * phi(q, j);
        const double ex = exact.separable()
                              ? gvals[m] * svals + offset
                              : exact.generic(x, angles.directions[m], t);
        const double err = std::abs(num - ex);
        l1 += angles.weights(m) * wq * err;
        linf = std::max(linf, err);
      }
    }
  }
  return {l1, linf};
}

template <int D>
std::pair<double, double> field_error_norms(
    const DGField<D>& field,
    const std::function<double(const Eigen::Matrix<double, D, 1>&)>& exact) {
  const auto& mesh = field.mesh();
  const int r = field.degree();
  const auto& rule = error_rule<D>(r);
  const Eigen::MatrixXd phi = reference_basis<D>(r).tabulate(rule.points);
  double l1 = 0.0, linf = 0.0;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const AffineMap<D> map = mesh.affine_map(e);
    for (int q = 0; q < rule.size(); ++q) {
      Eigen::Matrix<double, D, 1> ref;
      for (int d = 0; d < D; ++d) ref(d) = rule.points(q, d);
      double num = 0.0;
      for (int j = 0; j < field.n_basis(); ++j) num += field.coeffs()(e, j) * phi(q, j);
      const double err = std::abs(num - exact(map.to_physical(ref)));
      l1 += rule.weights(q) * map.determinant * err;
      linf = std::max(linf, err);
    }
  }
  return {l1, linf};
}

template <int D>
std::vector<double> sample_field(const DGField<D>& field,
                                 const std::vector<Eigen::Matrix<double, D, 1>>& points) {
  std::vector<double> values;
  values.reserve(points.size());
  int seed = 0;
  for (const auto& x : points) {
    const auto [e, lambda] = field.mesh().locate(x, seed);
    (void)lambda;
    seed = e;
    values.push_back(field.eval(e, x));
  }
  return values;
}

std::string discrepancy_csv(const std::vector<double>& coordinate,
                            const std::vector<double>& coarse,
                            const std::vector<double>& reference) {
  if (coordinate.size() != coarse.size() || coarse.size() != reference.size())
    throw ValidationError("discrepancy table needs equally sized samplings");
  std::ostringstream os;
  os.precision(17);
  os << "coordinate,value,reference,difference\n";
  for (std::size_t i = 0; i < coordinate.size(); ++i)
    os << coordinate[i] << "," << coarse[i] << "," << reference[i] << ","
       << coarse[i] - reference[i] << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// interpolation studies

InterpRunResult run_interp_single(const ExperimentSpec& spec, int resolution,
                                  unsigned seed) {
  spec.validate();
  InterpRunResult result;
  MmpdeOptions mmpde;
  mmpde.tau = spec.tau;
  mmpde.horizon = 1.0;
  mmpde.sweeps = spec.sweeps;
  mmpde.threads = spec.threads;

  InterpOptions options;
  options.cfl = spec.cfl;
  options.pp_limiter = spec.pp_limiter;
  options.scheme = spec.scheme;
  options.threads = spec.threads;

  if (spec.id == ExperimentId::Interp1dEx1) {
    auto old_mesh = std::make_shared<const SimplicialMesh<1>>(
        uniform_interval_mesh(0.0, 1.0, resolution));
    MetricProvider<1> provider = [](const SimplicialMesh<1>& mesh) {
      Eigen::VectorXd values(mesh.n_vertices());
      for (int i = 0; i < mesh.n_vertices(); ++i) values(i) = ex1_function(mesh.vertex(i)(0));
      return metric_from_nodal_values<1>(mesh, values);
    };
    auto new_mesh = move_mesh<1>(old_mesh, old_mesh, provider, mmpde);
    auto u = [](const Eigen::Matrix<double, 1, 1>& x) { return ex1_function(x(0)); };
    DGField<1> field = l2_project<1>(u, old_mesh, spec.degree);
    const MeshMotion<1> motion(old_mesh, new_mesh);
    result.stats = interpolate(field, motion, options);
    std::tie(result.l1, result.linf) = field_error_norms<1>(field, u);
    result.min_after = field.min_at_pp_points();
    result.max_displacement = motion.max_displacement();
    result.min_h = std::min(min_element_height(*old_mesh), min_element_height(*new_mesh));
    result.old_mesh_1d = old_mesh;
    result.new_mesh_1d = new_mesh;
  } else if (spec.id == ExperimentId::Interp2dEx2) {
    const int n = square4_n_from_elements(resolution);
    Rng rng(seed);
    auto old_mesh =
        std::make_shared<const SimplicialMesh<2>>(perturbed_delaunay_square(n, 0.4, rng));
    MetricProvider<2> provider = [](const SimplicialMesh<2>& mesh) {
      Eigen::VectorXd values(mesh.n_vertices());
      for (int i = 0; i < mesh.n_vertices(); ++i)
        values(i) = ex2_function(mesh.vertex(i)(0), mesh.vertex(i)(1));
      return metric_from_nodal_values<2>(mesh, values);
    };
    auto new_mesh = move_mesh<2>(old_mesh, old_mesh, provider, mmpde);
    auto u = [](const Eigen::Vector2d& x) { return ex2_function(x(0), x(1)); };
    DGField<2> field = l2_project<2>(u, old_mesh, spec.degree);
    const MeshMotion<2> motion(old_mesh, new_mesh);
    result.stats = interpolate(field, motion, options);
    std::tie(result.l1, result.linf) = field_error_norms<2>(field, u);
    result.min_after = field.min_at_pp_points();
    result.max_displacement = motion.max_displacement();
    result.min_h = std::min(min_element_height(*old_mesh), min_element_height(*new_mesh));
    result.old_mesh_2d = old_mesh;
    result.new_mesh_2d = new_mesh;
  } else {
    throw ValidationError("run_interp_single expects an interpolation experiment");
  }
  return result;
}

ErrorReport run_interp_experiment(const ExperimentSpec& spec) {
  spec.validate();
  ErrorReport report;
  report.spec = spec;
  for (int n : spec.resolutions) {
    for (unsigned seed : spec.seeds) {
      const double t0 = now_seconds();
      const InterpRunResult run = run_interp_single(spec, n, seed);
      RunRecord rec;
      rec.resolution = n;
      rec.seed = seed;
      rec.l1_error = run.l1;
      rec.linf_error = run.linf;
      rec.l1_final = run.l1;
      rec.linf_final = run.linf;
      rec.nsigma_avg = rec.nsigma_last = run.stats.n_steps;
      rec.steps = run.stats.n_steps;
      rec.min_value = run.min_after;
      rec.remap_limited_percent = 100.0 * run.stats.limited_fraction();
      rec.limited_percent = rec.remap_limited_percent;
      rec.max_displacement = run.max_displacement;
      rec.min_h = run.min_h;
      const double drift = std::abs(run.stats.mass_after - run.stats.mass_before) /
                           std::max(1.0, std::abs(run.stats.mass_before));
      rec.mass_drift_max = drift;
      rec.wall_seconds = now_seconds() - t0;
      report.runs.push_back(rec);
      if (!spec.out_dir.empty()) {
        std::filesystem::create_directories(spec.out_dir);
        const std::string prefix = spec.out_dir + "/" + experiment_name(spec.id) + "_N" +
                                   std::to_string(n) + "_s" + std::to_string(seed);
        if (run.old_mesh_1d) {
          write_mesh_file(prefix + "_old.mesh", *run.old_mesh_1d);
          write_mesh_file(prefix + "_new.mesh", *run.new_mesh_1d);
        } else if (run.old_mesh_2d) {
          write_mesh_file(prefix + "_old.mesh", *run.old_mesh_2d);
          write_mesh_file(prefix + "_new.mesh", *run.new_mesh_2d);
          write_vtk_file(prefix + "_new.vtk", *run.new_mesh_2d);
        }
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// transport studies

namespace {

template <int D>
struct RteProblem {
  RteConfig<D> config;
  ExactSolution<D> exact;  // empty generic -> no error accumulation
  std::function<SimplicialMesh<D>(int)> mesh_builder;
  bool has_exact = false;
};

RteProblem<1> ex3_problem(const ExperimentSpec& spec) {
  RteProblem<1> problem;
  auto& config = problem.config;
  config.c = 3.0e8;
  config.sigma_t = SpatialCoeff<1>::function([](const Eigen::Matrix<double, 1, 1>& x) {
    if (x(0) < 0.2) return 1.0;
    if (x(0) < 0.6) return 900.0;
    return 90.0;
  });
  config.sigma_s = SpatialCoeff<1>::constant_value(1.0);
  config.source = [](const Eigen::Matrix<double, 1, 1>& x,
                     const Eigen::Matrix<double, 1, 1>&, double t) {
    if (x(0) < 0.2) return 100.0 * std::exp(-t);
    if (x(0) < 0.6) return 1.0;
    return 1000.0 * std::exp(3.0 * t);
  };
  config.inflow = [](const Eigen::Matrix<double, 1, 1>& x,
                     const Eigen::Matrix<double, 1, 1>& mu, double t) {
    if (mu(0) > 0.0) return 0.0;          // left boundary, rightward directions
    (void)x;
    return 15.0 + 2.0 * t;                // right boundary, leftward directions
  };
  config.initial = [](const Eigen::Matrix<double, 1, 1>& x,
                      const Eigen::Matrix<double, 1, 1>&) { return 15.0 * x(0); };
  config.degree = spec.degree;
  config.dt = spec.dt;
  config.final_time = spec.final_time;
  config.angles = gauss_legendre_angles(spec.angles_1d);
  config.pp_limiter = spec.pp_limiter;
  config.threads = spec.threads;
  problem.mesh_builder = [](int n) { return uniform_interval_mesh(0.0, 1.0, n); };
  problem.has_exact = false;
  return problem;
}

RteProblem<2> ex4_problem(const ExperimentSpec& spec) {
  RteProblem<2> problem;
  auto& config = problem.config;
  const double sigma_t = 22000.0, sigma_s = 1.0, eps = 1e-14;
  const double c = 3.0e8;
  config.c = c;
  config.sigma_t = SpatialCoeff<2>::constant_value(sigma_t);
  config.sigma_s = SpatialCoeff<2>::constant_value(sigma_s);
  auto s = [](const Eigen::Vector2d& x) {
    const double cc = std::cos(0.5 * M_PI * (x(0) + x(1)));
    return cc * cc * cc * cc;
  };
  auto sp = [](const Eigen::Vector2d& x) {
    const double a = 0.5 * M_PI * (x(0) + x(1));
    const double cc = std::cos(a);
    return -2.0 * M_PI * cc * cc * cc * std::sin(a);
  };
  auto a_of = [](const Eigen::Vector2d& w) { return w.squaredNorm(); };
  // manufactured source: the angular integral of the exact intensity is
  // (2/3) s + eps, reproduced exactly by the Legendre-Chebyshev weights
  config.separable_source = {
      {[s, c, sigma_t](const Eigen::Vector2d& x, double t) {
         return std::exp(t) * s(x) * (1.0 / c + sigma_t);
       },
       a_of},
      {[sp](const Eigen::Vector2d& x, double t) { return std::exp(t) * sp(x); },
       [a_of](const Eigen::Vector2d& w) { return a_of(w) * (w(0) + w(1)); }},
      {[s, c, sigma_t, sigma_s, eps](const Eigen::Vector2d& x, double t) {
         return std::exp(t) *
                (eps * (sigma_t + 1.0 / c - sigma_s) - sigma_s * (2.0 / 3.0) * s(x));
       },
       [](const Eigen::Vector2d&) { return 1.0; }}};
  auto exact_value = [s, eps, a_of](const Eigen::Vector2d& x, const Eigen::Vector2d& w,
                                    double t) {
    return std::exp(t) * (a_of(w) * s(x) + eps);
  };
  config.inflow = exact_value;
  config.initial = [exact_value](const Eigen::Vector2d& x, const Eigen::Vector2d& w) {
    return exact_value(x, w, 0.0);
  };
  config.degree = spec.degree;
  config.dt = spec.dt;
  config.final_time = spec.final_time;
  config.angles = legendre_chebyshev(spec.angles_nl, spec.angles_nc);
  config.pp_limiter = spec.pp_limiter;
  config.threads = spec.threads;
  problem.exact.spatial = [s](const Eigen::Vector2d& x, double t) {
    return std::exp(t) * s(x);
  };
  problem.exact.angular = a_of;
  problem.exact.offset = [eps](double t) { return std::exp(t) * eps; };
  problem.exact.generic = exact_value;
  problem.has_exact = true;
  problem.mesh_builder = [](int n_elements) {
    return square_quad4_mesh(square4_n_from_elements(n_elements));
  };
  return problem;
}

RteProblem<2> ex5_problem(const ExperimentSpec& spec) {
  RteProblem<2> problem;
  auto& config = problem.config;
  const double zeta = 0.3, eta = 0.5, eps = 1e-14;
  const double c = 3.0e8;
  config.c = c;
  config.sigma_t = SpatialCoeff<2>::constant_value(0.0);
  config.sigma_s = SpatialCoeff<2>::constant_value(0.0);
  config.inflow = [eps](const Eigen::Vector2d& x, const Eigen::Vector2d&, double t) {
    if (x(0) < 1e-12) {
      const double cy = std::cos(0.5 * M_PI * x(1));
      return std::pow(cy, 6) * std::pow(std::cos(t), 10);
    }
    return eps;  // bottom inflow
  };
  config.initial = [zeta, eta, eps](const Eigen::Vector2d& x, const Eigen::Vector2d&) {
    if (x(1) < (eta / zeta) * x(0)) return eps;
    return std::pow(std::cos(0.5 * M_PI * x(1)), 6);
  };
  auto exact = [zeta, eta, eps, c](const Eigen::Vector2d& x, const Eigen::Vector2d&,
                                   double t) {
    if (x(1) < (eta / zeta) * x(0)) return eps;
    const double arg = x(1) - (eta / zeta) * x(0);
    return std::pow(std::cos(0.5 * M_PI * arg), 6) *
           std::pow(std::cos(t - x(0) / (c * zeta)), 10);
  };
  config.degree = spec.degree;
  config.dt = spec.dt;
  config.final_time = spec.final_time;
  config.angles = single_direction(zeta, eta);
  config.pp_limiter = spec.pp_limiter;
  config.threads = spec.threads;
  problem.exact.generic = exact;
  problem.has_exact = true;
  problem.mesh_builder = [](int n_elements) {
    return square_quad4_mesh(square4_n_from_elements(n_elements));
  };
  return problem;
}

// metric for the transport mesh: intersection over the scalar flux and the
// first/last directions (all directions behind the full_intersection flag)
template <int D>
MetricField<D> transport_metric(const RadiativeState<D>& state,
                                const AngularQuadrature<D>& angles,
                                bool full_intersection) {
  const auto& mesh = state.mesh();
  std::vector<MetricField<D>> parts;
  const DGField<D> flux = state.scalar_flux(angles);
  parts.push_back(metric_from_nodal_values<D>(mesh, vertex_values(flux)));
  std::vector<int> extremes;
  if (full_intersection) {
    for (int m = 0; m < angles.size(); ++m) extremes.push_back(m);
  } else if (angles.size() > 1) {
    extremes = {0, angles.size() - 1};
  }
  for (int m : extremes)
    parts.push_back(
        metric_from_nodal_values<D>(mesh, vertex_values(state.intensities[m])));
  return metric_intersection<D>(parts);
}

template <int D>
void dump_final_state(const ExperimentSpec& spec, int resolution,
                      const RadiativeState<D>& state, const RteProblem<D>& problem) {
  if (spec.out_dir.empty()) return;
  std::filesystem::create_directories(spec.out_dir);
  const std::string prefix = spec.out_dir + "/" + experiment_name(spec.id) + "_N" +
                             std::to_string(resolution) + "_" +
                             (spec.moving_mesh ? "mm" : "fm") + "_r" +
                             std::to_string(spec.degree);
  const auto& mesh = state.mesh();
  if constexpr (D == 1) {
    // cell-midpoint intensities per direction
    std::ofstream os(prefix + "_intensity.csv");
    os.precision(17);
    os << "x";
    for (std::size_t m = 0; m < state.intensities.size(); ++m) os << ",I" << m;
    os << "\n";
    for (int e = 0; e < mesh.n_elements(); ++e) {
      const auto c = mesh.centroid(e);
      os << c(0);
      for (const auto& field : state.intensities) os << "," << field.eval(e, c);
      os << "\n";
    }
    write_mesh_file(prefix + "_final.mesh", mesh);
  } else {
    const DGField<D> flux = state.scalar_flux(problem.config.angles);
    Eigen::VectorXd cell(mesh.n_elements());
    for (int e = 0; e < mesh.n_elements(); ++e) cell(e) = flux.cell_average(e);
    write_vtk_file(prefix + "_flux.vtk", mesh, &cell, "scalar_flux");
    if (spec.id == ExperimentId::Rte2dEx5) {
      // intensity cut along y = 0.495
      std::vector<Eigen::Vector2d> pts;
      std::vector<double> xs;
      for (int k = 0; k < 512; ++k) {
        const double x = (k + 0.5) / 512.0;
        pts.emplace_back(x, 0.495);
        xs.push_back(x);
      }
      const auto vals = sample_field<2>(state.intensities[0], pts);
      std::vector<double> exact_vals(pts.size());
      for (std::size_t k = 0; k < pts.size(); ++k)
        exact_vals[k] =
            problem.exact.generic(pts[k], problem.config.angles.directions[0], state.time);
      std::ofstream os(prefix + "_cut_y0.495.csv");
      os << discrepancy_csv(xs, vals, exact_vals);
    }
  }
}

template <int D>
RunRecord run_rte_single(const ExperimentSpec& spec, RteProblem<D>& problem,
                         int resolution) {
  RunRecord rec;
  rec.resolution = resolution;
  const double t0 = now_seconds();

  auto mesh0 = std::make_shared<const SimplicialMesh<D>>(problem.mesh_builder(resolution));
  auto& config = problem.config;
  RadiativeState<D> state = initial_state<D>(config, mesh0);
  rec.min_value = std::min(rec.min_value, state.min_at_pp_points());

  const int n_dir = config.angles.size();
  InterpOptions remap_options;
  remap_options.cfl = spec.cfl;
  remap_options.pp_limiter = spec.pp_limiter;
  remap_options.threads = spec.threads;

  std::optional<RteSolver<D>> fixed_solver;
  double fixed_solver_dt = -1.0;
  auto current_mesh = mesh0;
  double dt_prev = spec.dt;
  if (spec.dt_policy != DtPolicy::Fixed)
    dt_prev = (spec.dt_policy == DtPolicy::HalfMinH ? 0.5 : 0.1) *
              min_element_height(*mesh0);

  double t = 0.0;
  long steps = 0;
  long si_total = 0;
  long rte_limited = 0, rte_limit_opportunities = 0;
  long remap_limited = 0, remap_opportunities = 0;
  double nsigma_sum = 0.0;
  std::ofstream trajectory;
  if (!spec.out_dir.empty() && D == 1 && spec.moving_mesh) {
    std::filesystem::create_directories(spec.out_dir);
    trajectory.open(spec.out_dir + "/" + experiment_name(spec.id) + "_N" +
                    std::to_string(resolution) + "_r" + std::to_string(spec.degree) +
                    "_trajectory.csv");
    trajectory.precision(17);
  }

  while (t < spec.final_time - 1e-13) {
    // error accumulation (left rectangle in time)
    double dt = spec.dt;

    std::shared_ptr<const SimplicialMesh<D>> next_mesh = current_mesh;
    if (spec.moving_mesh) {
      const MetricField<D> metric =
          transport_metric<D>(state, config.angles, spec.full_intersection);
      MmpdeOptions mmpde;
      mmpde.tau = spec.tau;
      mmpde.horizon = dt_prev;
      mmpde.sweeps = 1;
      mmpde.threads = spec.threads;
      next_mesh = move_mesh<D>(current_mesh, mesh0, metric, mmpde);
    }
    if (spec.dt_policy != DtPolicy::Fixed) {
      const double factor = spec.dt_policy == DtPolicy::HalfMinH ? 0.5 : 0.1;
      dt = factor *
           std::min(min_element_height(*current_mesh), min_element_height(*next_mesh));
    }
    dt = std::min(dt, spec.final_time - t);

    if (problem.has_exact) {
      const auto [l1, linf] = error_norms<D>(state, problem.exact, config.angles);
      if (std::isnan(rec.l1_error)) rec.l1_error = rec.linf_error = 0.0;
      rec.l1_error += dt * l1;
      rec.linf_error += dt * linf;
    }

    if (spec.moving_mesh) {
      // conservative remap of every direction onto the new mesh
      const MeshMotion<D> motion(current_mesh, next_mesh);
      std::vector<DGField<D>*> fields;
      fields.reserve(n_dir);
      for (auto& f : state.intensities) fields.push_back(&f);
      const auto stats = interpolate_many<D>(fields, motion, remap_options);
      nsigma_sum += stats.front().n_steps;
      for (const auto& s : stats) {
        const double drift = std::abs(s.mass_after - s.mass_before) /
                             std::max(1.0, std::abs(s.mass_before));
        rec.mass_drift_max = std::max(rec.mass_drift_max, drift);
        if (drift > 1e-12)
          throw Error("remap conservation audit failed: relative drift " +
                      std::to_string(drift));
        remap_limited += s.limited_cells;
        remap_opportunities += s.limit_applications;
      }
      rec.min_value = std::min(rec.min_value, state.min_at_pp_points());
      current_mesh = next_mesh;
      rec.nsigma_last = stats.front().n_steps;
    }

    config.dt = dt;
    SourceIterationReport si;
    if (!spec.moving_mesh) {
      if (!fixed_solver || fixed_solver_dt != dt) {
        fixed_solver.emplace(current_mesh, config);
        fixed_solver_dt = dt;
      }
      si = fixed_solver->step(state);
    } else {
      RteSolver<D> solver(current_mesh, config);
      si = solver.step(state);
    }
    si_total += si.iterations;
    rec.si_final_update_max = std::max(rec.si_final_update_max, si.final_update);
    rte_limited += si.limited_cells;
    rte_limit_opportunities += static_cast<long>(si.iterations) * n_dir *
                               current_mesh->n_elements();
    rec.min_value = std::min(rec.min_value, state.min_at_pp_points());

    if (trajectory.is_open()) {
      trajectory << t;
      for (int i = 0; i < current_mesh->n_vertices(); ++i)
        trajectory << "," << current_mesh->vertex(i)(0);
      trajectory << "\n";
    }

    t = state.time;
    dt_prev = dt;
    ++steps;
  }

  if (problem.has_exact) {
    const auto [l1, linf] = error_norms<D>(state, problem.exact, config.angles);
    rec.l1_final = l1;
    rec.linf_final = linf;
  }
  rec.steps = static_cast<int>(steps);
  rec.si_iterations_avg = steps > 0 ? static_cast<double>(si_total) / steps : 0.0;
  rec.nsigma_avg = spec.moving_mesh && steps > 0 ? nsigma_sum / steps : 0.0;
  rec.limited_percent = rte_limit_opportunities > 0
                            ? 100.0 * static_cast<double>(rte_limited) /
                                  static_cast<double>(rte_limit_opportunities)
                            : 0.0;
  rec.remap_limited_percent =
      remap_opportunities > 0
          ? 100.0 * static_cast<double>(remap_limited) / static_cast<double>(remap_opportunities)
          : 0.0;
  rec.min_h = min_element_height(*current_mesh);
  rec.wall_seconds = now_seconds() - t0;
  dump_final_state<D>(spec, resolution, state, problem);
  return rec;
}

}  // namespace

ErrorReport run_rte_experiment(const ExperimentSpec& spec) {
  spec.validate();
  ErrorReport report;
  report.spec = spec;
  for (int n : spec.resolutions) {
    RunRecord rec;
    switch (spec.id) {
      case ExperimentId::Rte1dEx3: {
        auto problem = ex3_problem(spec);
        rec = run_rte_single<1>(spec, problem, n);
        break;
      }
      case ExperimentId::Rte2dEx4: {
        auto problem = ex4_problem(spec);
        rec = run_rte_single<2>(spec, problem, n);
        break;
      }
      case ExperimentId::Rte2dEx5: {
        auto problem = ex5_problem(spec);
        rec = run_rte_single<2>(spec, problem, n);
        break;
      }
      default:
        throw ValidationError("run_rte_experiment expects a transport experiment");
    }
    rec.seed = spec.seeds.front();
    report.runs.push_back(rec);
  }
  return report;
}

// ---------------------------------------------------------------------------
// report assembly

double ErrorReport::mean_l1(int resolution) const {
  double log_sum = 0.0;
  int count = 0;
  for (const auto& run : runs)
    if (run.resolution == resolution && std::isfinite(run.l1_error)) {
      log_sum += std::log(run.l1_error);
      ++count;
    }
  return count > 0 ? std::exp(log_sum / count) : std::numeric_limits<double>::quiet_NaN();
}

double ErrorReport::mean_linf(int resolution) const {
  double log_sum = 0.0;
  int count = 0;
  for (const auto& run : runs)
    if (run.resolution == resolution && std::isfinite(run.linf_error)) {
      log_sum += std::log(run.linf_error);
      ++count;
    }
  return count > 0 ? std::exp(log_sum / count) : std::numeric_limits<double>::quiet_NaN();
}

namespace {

std::vector<double> orders_from_means(const std::vector<int>& resolutions,
                                      const std::function<double(int)>& mean, int dim) {
  std::vector<double> orders;
  for (std::size_t k = 1; k < resolutions.size(); ++k) {
    const double e0 = mean(resolutions[k - 1]);
    const double e1 = mean(resolutions[k]);
    const double ratio = std::log(e0 / e1);
    const double href = std::log(std::pow(static_cast<double>(resolutions[k]) /
                                              resolutions[k - 1],
                                          1.0 / dim));
    orders.push_back(ratio / href);
  }
  return orders;
}

double slope_from_means(const std::vector<int>& resolutions,
                        const std::function<double(int)>& mean, int dim) {
  // least squares of log e against log h
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (int res : resolutions) {
    const double e = mean(res);
    if (!std::isfinite(e) || e <= 0.0) continue;
    const double x = -std::log(static_cast<double>(res)) / dim;  // log h up to a constant
    const double y = std::log(e);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

std::vector<double> ErrorReport::l1_orders() const {
  const int dim = spec.id == ExperimentId::Interp1dEx1 || spec.id == ExperimentId::Rte1dEx3
                      ? 1
                      : 2;
  return orders_from_means(spec.resolutions, [this](int n) { return mean_l1(n); }, dim);
}

std::vector<double> ErrorReport::linf_orders() const {
  const int dim = spec.id == ExperimentId::Interp1dEx1 || spec.id == ExperimentId::Rte1dEx3
                      ? 1
                      : 2;
  return orders_from_means(spec.resolutions, [this](int n) { return mean_linf(n); }, dim);
}

double ErrorReport::l1_slope(int dim) const {
  return slope_from_means(spec.resolutions, [this](int n) { return mean_l1(n); }, dim);
}

double ErrorReport::linf_slope(int dim) const {
  return slope_from_means(spec.resolutions, [this](int n) { return mean_linf(n); }, dim);
}

std::string ErrorReport::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "experiment,resolution,seed,degree,pp,l1,linf,l1_final,linf_final,nsigma_avg,"
        "limited_percent,remap_limited_percent,si_iterations_avg,si_final_update_max,"
        "min_value,mass_drift_max,max_displacement,min_h,steps,wall_seconds\n";
  for (const auto& r : runs) {
    os << experiment_name(spec.id) << "," << r.resolution << "," << r.seed << ","
       << spec.degree << "," << (spec.pp_limiter ? 1 : 0) << "," << r.l1_error << ","
       << r.linf_error << "," << r.l1_final << "," << r.linf_final << "," << r.nsigma_avg
       << "," << r.limited_percent << "," << r.remap_limited_percent << ","
       << r.si_iterations_avg << "," << r.si_final_update_max << "," << r.min_value << ","
       << r.mass_drift_max << "," << r.max_displacement << "," << r.min_h << "," << r.steps
       << "," << r.wall_seconds << "\n";
  }
  return os.str();
}

std::string ErrorReport::to_table(int dim) const {
  std::ostringstream os;
  os << std::setw(8) << "N" << std::setw(14) << "L1" << std::setw(8) << "order"
     << std::setw(14) << "Linf" << std::setw(8) << "order" << std::setw(12) << "limiter(%)"
     << std::setw(10) << "N_sigma" << "\n";
  const auto l1o = l1_orders();
  const auto lio = linf_orders();
  (void)dim;
  for (std::size_t k = 0; k < spec.resolutions.size(); ++k) {
    const int n = spec.resolutions[k];
    double lim = 0.0, nsig = 0.0;
    int count = 0;
    for (const auto& r : runs)
      if (r.resolution == n) {
        lim += r.limited_percent;
        nsig += r.nsigma_avg;
        ++count;
      }
    if (count > 0) {
      lim /= count;
      nsig /= count;
    }
    os << std::setw(8) << n << std::setw(14) << std::scientific << std::setprecision(3)
       << mean_l1(n);
    if (k == 0)
      os << std::setw(8) << "-";
    else
      os << std::setw(8) << std::fixed << std::setprecision(3) << l1o[k - 1];
    os << std::setw(14) << std::scientific << std::setprecision(3) << mean_linf(n);
    if (k == 0)
      os << std::setw(8) << "-";
    else
      os << std::setw(8) << std::fixed << std::setprecision(3) << lio[k - 1];
    os << std::setw(12) << std::fixed << std::setprecision(2) << lim << std::setw(10)
       << std::setprecision(2) << nsig << "\n";
  }
  return os.str();
}

template std::pair<double, double> error_norms<1>(const RadiativeState<1>&,
                                                  const ExactSolution<1>&,
                                                  const AngularQuadrature<1>&);
template std::pair<double, double> error_norms<2>(const RadiativeState<2>&,
                                                  const ExactSolution<2>&,
                                                  const AngularQuadrature<2>&);
template std::pair<double, double> field_error_norms<1>(
    const DGField<1>&, const std::function<double(const Eigen::Matrix<double, 1, 1>&)>&);
template std::pair<double, double> field_error_norms<2>(
    const DGField<2>&, const std::function<double(const Eigen::Matrix<double, 2, 1>&)>&);
template std::vector<double> sample_field<1>(
    const DGField<1>&, const std::vector<Eigen::Matrix<double, 1, 1>>&);
template std::vector<double> sample_field<2>(
    const DGField<2>&, const std::vector<Eigen::Matrix<double, 2, 1>>&);

}  // namespace dgremap

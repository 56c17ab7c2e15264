// Command-line driver for the interpolation and transport studies.
#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "dgremap/config.hpp"
#include "dgremap/driver.hpp"
#include "dgremap/mesh_io.hpp"

namespace {

using namespace dgremap;

ExperimentSpec spec_from_config(const RunConfig& config) {
  ExperimentSpec spec;
  switch (experiment_from_name(config.experiment)) {
    case ExperimentId::Interp1dEx1: spec = ex1_spec(); break;
    case ExperimentId::Interp2dEx2: spec = ex2_spec(); break;
    case ExperimentId::Rte1dEx3: spec = ex3_spec(); break;
    case ExperimentId::Rte2dEx4: spec = ex4_spec(); break;
    case ExperimentId::Rte2dEx5: spec = ex5_spec(); break;
  }
  if (!config.resolutions.empty()) spec.resolutions = config.resolutions;
  spec.degree = config.degree;
  spec.pp_limiter = config.pp;
  spec.cfl = config.cfl;
  spec.tau = config.tau;
  spec.sweeps = config.sweeps;
  spec.dt = config.dt;
  spec.final_time = config.final_time;
  spec.moving_mesh = !config.fixed_mesh;
  spec.full_intersection = config.full_intersection;
  spec.threads = config.threads;
  spec.out_dir = config.out_dir;
  if (config.dt_policy == "half-hmin") spec.dt_policy = DtPolicy::HalfMinH;
  else if (config.dt_policy == "tenth-hmin") spec.dt_policy = DtPolicy::TenthMinH;
  spec.seeds.clear();
  for (int k = 0; k < config.runs; ++k) spec.seeds.push_back(config.seed + k);
  return spec;
}

void write_report(const RunConfig& config, const ErrorReport& report, int dim) {
  std::filesystem::create_directories(config.out_dir);
  const std::string base = config.out_dir + "/" + config.experiment;
  {
    std::ofstream os(base + "_report.csv");
    os << report.to_csv();
  }
  {
    std::ofstream os(base + "_table.txt");
    os << report.to_table(dim);
  }
  if (config.verbosity > 0) std::cout << report.to_table(dim);
}

int run_experiment_command(RunConfig config) {
  config.finalize_and_validate();
  std::filesystem::create_directories(config.out_dir);
  write_manifest(config, config.out_dir + "/manifest.ini");
  const ExperimentSpec spec = spec_from_config(config);
  const ExperimentId id = spec.id;
  const bool interp =
      id == ExperimentId::Interp1dEx1 || id == ExperimentId::Interp2dEx2;
  const int dim =
      (id == ExperimentId::Interp1dEx1 || id == ExperimentId::Rte1dEx3) ? 1 : 2;
  const ErrorReport report =
      interp ? run_interp_experiment(spec) : run_rte_experiment(spec);
  write_report(config, report, dim);
  return 0;
}

template <int D>
int remap_files(const RunConfig& config) {
  auto old_mesh =
      std::make_shared<const SimplicialMesh<D>>(read_mesh_file<D>(config.old_mesh_file));
  auto new_mesh =
      std::make_shared<const SimplicialMesh<D>>(read_mesh_file<D>(config.new_mesh_file));
  std::ifstream is(config.field_file);
  if (!is) throw IoError("cannot open " + config.field_file);
  std::stringstream buffer;
  buffer << is.rdbuf();
  // infer the degree from the column count
  std::string header;
  std::getline(buffer, header);
  const int n_cols = static_cast<int>(std::count(header.begin(), header.end(), ',')) + 1;
  const int n_b = n_cols - 2;
  int degree = -1;
  for (int r = 1; r <= 4; ++r)
    if (reference_basis<D>(r).size() == n_b) degree = r;
  if (degree < 0) throw ValidationError("field file column count matches no degree");
  buffer.seekg(0);
  DGField<D> field = DGField<D>::from_csv(old_mesh, degree, buffer.str());

  const MeshMotion<D> motion(old_mesh, new_mesh);
  InterpOptions options;
  options.pp_limiter = config.pp;
  options.cfl = config.cfl;
  options.threads = config.threads;
  const InterpStats stats = interpolate(field, motion, options);

  std::filesystem::create_directories(config.out_dir);
  {
    std::ofstream os(config.out_dir + "/remapped_field.csv");
    os << field.to_csv();
  }
  {
    std::ofstream os(config.out_dir + "/remap_stats.csv");
    os.precision(17);
    os << stats.to_csv_header() << "\n";
    os << stats.n_steps << "," << stats.mass_before << "," << stats.mass_after << ","
       << stats.min_before << "," << stats.min_after << "," << stats.limited_cells << ","
       << stats.limit_applications << "," << stats.dsigma_cfl << "," << stats.dsigma_pp
       << "\n";
  }
  if (config.verbosity > 0)
    std::cout << "remap: N_sigma=" << stats.n_steps << " mass drift="
              << stats.mass_after - stats.mass_before << "\n";
  return 0;
}

int run_remap_command(RunConfig config) {
  config.finalize_and_validate();
  std::filesystem::create_directories(config.out_dir);
  write_manifest(config, config.out_dir + "/manifest.ini");
  const int dim = mesh_file_dimension(config.old_mesh_file);
  if (dim == 1) return remap_files<1>(config);
  if (dim == 2) return remap_files<2>(config);
  throw ValidationError("unsupported mesh dimension " + std::to_string(dim));
}

int run_mesh_demo(RunConfig config) {
  config.finalize_and_validate();
  std::filesystem::create_directories(config.out_dir);
  write_manifest(config, config.out_dir + "/manifest.ini");
  const int n = config.resolutions.empty() ? 20 : config.resolutions.front();
  MmpdeOptions mmpde;
  mmpde.tau = config.tau;
  mmpde.sweeps = config.sweeps;
  mmpde.threads = config.threads;

  if (config.mesh_type == "uniform1d") {
    auto mesh = std::make_shared<const SimplicialMesh<1>>(uniform_interval_mesh(0, 1, n));
    write_mesh_file(config.out_dir + "/mesh.mesh", *mesh);
    if (config.adapt == "ex1") {
      MetricProvider<1> provider = [](const SimplicialMesh<1>& m) {
        Eigen::VectorXd v(m.n_vertices());
        for (int i = 0; i < m.n_vertices(); ++i) {
          const double cx = std::cos(M_PI * m.vertex(i)(0));
          v(i) = cx * cx + 1e-14;
        }
        return metric_from_nodal_values<1>(m, v);
      };
      auto adapted = move_mesh<1>(mesh, mesh, provider, mmpde);
      write_mesh_file(config.out_dir + "/adapted.mesh", *adapted);
    }
    return 0;
  }
  std::shared_ptr<const SimplicialMesh<2>> mesh;
  if (config.mesh_type == "square4")
    mesh = std::make_shared<const SimplicialMesh<2>>(square_quad4_mesh(n));
  else if (config.mesh_type == "diag")
    mesh = std::make_shared<const SimplicialMesh<2>>(square_diag_mesh(n));
  else {
    Rng rng(config.seed);
    mesh = std::make_shared<const SimplicialMesh<2>>(perturbed_delaunay_square(n, 0.4, rng));
  }
  write_mesh_file(config.out_dir + "/mesh.mesh", *mesh);
  write_vtk_file(config.out_dir + "/mesh.vtk", *mesh);
  if (config.adapt == "ex2") {
    MetricProvider<2> provider = [](const SimplicialMesh<2>& m) {
      Eigen::VectorXd v(m.n_vertices());
      for (int i = 0; i < m.n_vertices(); ++i) {
        const double r2 = (m.vertex(i)(0) - 0.5) * (m.vertex(i)(0) - 0.5) +
                          (m.vertex(i)(1) - 0.5) * (m.vertex(i)(1) - 0.5);
        v(i) = 1.0 - std::tanh(50.0 * (r2 - 1.0 / 16.0)) + 1e-14;
      }
      return metric_from_nodal_values<2>(m, v);
    };
    auto adapted = move_mesh<2>(mesh, mesh, provider, mmpde);
    write_mesh_file(config.out_dir + "/adapted.mesh", *adapted);
    write_vtk_file(config.out_dir + "/adapted.vtk", *adapted);
    const auto metric = provider(*adapted);
    std::ofstream os(config.out_dir + "/metric.csv");
    os << metric_to_csv(metric);
  }
  return 0;
}

int dispatch(RunConfig config) {
  if (config.subcommand == "remap") return run_remap_command(std::move(config));
  if (config.subcommand == "mesh-demo") return run_mesh_demo(std::move(config));
  return run_experiment_command(std::move(config));
}

void add_common_flags(CLI::App* cmd, RunConfig& config, std::string& n_list) {
  cmd->add_option("--r", config.degree, "polynomial degree (1 or 2)");
  cmd->add_option("--N", n_list, "comma-separated element counts");
  cmd->add_flag("--pp,!--no-pp", config.pp, "positivity limiter");
  cmd->add_option("--cfl", config.cfl, "pseudo-time CFL number (0 = default)");
  cmd->add_option("--tau", config.tau, "mesh relaxation parameter");
  cmd->add_option("--sweeps", config.sweeps, "mesh-generation sweeps");
  cmd->add_option("--dt", config.dt, "physical time step");
  cmd->add_option("--T", config.final_time, "final time");
  cmd->add_option("--seed", config.seed, "base random seed");
  cmd->add_option("--runs", config.runs, "randomized runs per resolution");
  cmd->add_option("--threads", config.threads, "worker threads");
  cmd->add_option("--out", config.out_dir, "output directory (default $DGREMAP_OUT or ./out)");
  cmd->add_option("--verbosity", config.verbosity, "0 = quiet");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conservative DG remapping, moving meshes, and transport"};
  app.require_subcommand(0, 1);

  RunConfig config;
  std::string n_list;
  std::string config_path;

  auto* interp = app.add_subcommand("interp-test", "interpolation study (ex1, ex2)");
  interp->add_option("experiment", config.experiment, "ex1 or ex2")->required();
  add_common_flags(interp, config, n_list);

  auto* rte1d = app.add_subcommand("rte1d", "1D transport study (ex3)");
  rte1d->add_option("experiment", config.experiment, "ex3")->required();
  rte1d->add_flag("--fixed-mesh", config.fixed_mesh, "disable mesh movement");
  rte1d->add_option("--dt-policy", config.dt_policy, "fixed | half-hmin | tenth-hmin");
  rte1d->add_flag("--full-intersection", config.full_intersection,
                  "intersect the metric over every direction");
  add_common_flags(rte1d, config, n_list);

  auto* rte2d = app.add_subcommand("rte2d", "2D transport study (ex4, ex5)");
  rte2d->add_option("experiment", config.experiment, "ex4 or ex5")->required();
  rte2d->add_flag("--fixed-mesh", config.fixed_mesh, "disable mesh movement");
  rte2d->add_option("--dt-policy", config.dt_policy, "fixed | half-hmin | tenth-hmin");
  rte2d->add_flag("--full-intersection", config.full_intersection,
                  "intersect the metric over every direction");
  add_common_flags(rte2d, config, n_list);

  auto* demo = app.add_subcommand("mesh-demo", "generate and optionally adapt a mesh");
  demo->add_option("--type", config.mesh_type, "uniform1d | square4 | diag | delaunay");
  demo->add_option("--adapt", config.adapt, "adapt to ex1/ex2 data");
  add_common_flags(demo, config, n_list);

  auto* remap = app.add_subcommand("remap", "remap a field between two mesh files");
  remap->add_option("old_mesh", config.old_mesh_file, "old mesh file")->required();
  remap->add_option("new_mesh", config.new_mesh_file, "new mesh file")->required();
  remap->add_option("field", config.field_file, "field csv on the old mesh")->required();
  add_common_flags(remap, config, n_list);

  auto* rerun = app.add_subcommand("rerun", "re-run from a manifest file");
  rerun->add_option("manifest", config_path, "manifest.ini")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (rerun->parsed()) {
      RunConfig from_file = dgremap::parse_config_file(config_path);
      return dispatch(std::move(from_file));
    }
    if (interp->parsed()) config.subcommand = "interp-test";
    else if (rte1d->parsed()) config.subcommand = "rte1d";
    else if (rte2d->parsed()) config.subcommand = "rte2d";
    else if (demo->parsed()) config.subcommand = "mesh-demo";
    else if (remap->parsed()) config.subcommand = "remap";
    else {
      std::cout << app.help();
      return 0;
    }
    if (!n_list.empty()) {
      std::stringstream ss(n_list);
      std::string item;
      config.resolutions.clear();
      while (std::getline(ss, item, ',')) config.resolutions.push_back(std::stoi(item));
    }
    return dispatch(std::move(config));
  } catch (const dgremap::ValidationError& err) {
    std::cerr << "validation error: " << err.what() << "\n";
    return 1;
  } catch (const dgremap::ParseError& err) {
    std::cerr << "parse error: " << err.what() << "\n";
    return 1;
  } catch (const dgremap::IoError& err) {
    std::cerr << "io error: " << err.what() << "\n";
    return 1;
  } catch (const dgremap::Error& err) {
    std::cerr << "numerical failure: " << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }
}

// Run configuration: strict key-value config files, validation, manifests.
#pragma once

#include <string>
#include <vector>

#include "dgremap/errors.hpp"

namespace dgremap {

struct RunConfig {
  std::string subcommand;  // interp-test | rte1d | rte2d | mesh-demo | remap
  std::string experiment;  // ex1..ex5 where applicable

  std::vector<int> resolutions;
  int degree = 2;
  bool pp = true;
  double cfl = 0.0;  // 0 = scheme default
  double tau = 0.01;
  int sweeps = 5;
  double dt = 2e-4;
  double final_time = 0.1;
  std::string dt_policy = "fixed";  // fixed | half-hmin | tenth-hmin
  bool fixed_mesh = false;
  bool full_intersection = false;
  unsigned seed = 1;
  int runs = 1;  // randomized runs per resolution
  int threads = 1;
  int verbosity = 1;
  std::string out_dir;  // resolved against DGREMAP_OUT when empty

  // remap subcommand
  std::string old_mesh_file, new_mesh_file, field_file;
  // mesh-demo subcommand
  std::string mesh_type = "uniform1d";  // uniform1d | square4 | diag | delaunay
  std::string adapt;                    // "", "ex1", "ex2"

  // fills out_dir from the environment and checks every constraint; throws
  // ValidationError listing all violations
  void finalize_and_validate();

  std::string to_manifest() const;
};

// Strict parser for the manifest/config format: a single [run] section of
// key = value lines, '#' comments.  Unknown keys, duplicate keys, and
// malformed lines raise ParseError with the offending line.
RunConfig parse_config(const std::string& text);
RunConfig parse_config_file(const std::string& path);

void write_manifest(const RunConfig& config, const std::string& path);

}  // namespace dgremap

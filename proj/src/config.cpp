#include "dgremap/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace dgremap {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

bool parse_bool(const std::string& v, int line) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ParseError("line " + std::to_string(line) + ": expected a boolean, got '" + v + "'",
                   line);
}

std::vector<int> parse_int_list(const std::string& v, int line) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ParseError("line " + std::to_string(line) + ": bad integer '" + item + "'", line);
    }
  }
  return out;
}

double parse_double(const std::string& v, int line) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(line) + ": bad number '" + v + "'", line);
  }
}

int parse_int(const std::string& v, int line) {
  try {
    std::size_t used = 0;
    const int x = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(line) + ": bad integer '" + v + "'", line);
  }
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig config;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  bool in_run = false;
  std::set<std::string> seen;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line == "[run]") {
        in_run = true;
        continue;
      }
      throw ParseError("line " + std::to_string(line_no) + ": unknown section " + line,
                       line_no);
    }
    if (!in_run)
      throw ParseError("line " + std::to_string(line_no) + ": key outside the [run] section",
                       line_no);
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("line " + std::to_string(line_no) + ": expected key = value", line_no);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ParseError("line " + std::to_string(line_no) + ": empty key", line_no);
    if (!seen.insert(key).second)
      throw ParseError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'",
                       line_no, key);

    if (key == "subcommand") config.subcommand = value;
    else if (key == "experiment") config.experiment = value;
    else if (key == "N") config.resolutions = parse_int_list(value, line_no);
    else if (key == "r") config.degree = parse_int(value, line_no);
    else if (key == "pp") config.pp = parse_bool(value, line_no);
    else if (key == "cfl") config.cfl = parse_double(value, line_no);
    else if (key == "tau") config.tau = parse_double(value, line_no);
    else if (key == "sweeps") config.sweeps = parse_int(value, line_no);
    else if (key == "dt") config.dt = parse_double(value, line_no);
    else if (key == "T") config.final_time = parse_double(value, line_no);
    else if (key == "dt_policy") config.dt_policy = value;
    else if (key == "fixed_mesh") config.fixed_mesh = parse_bool(value, line_no);
    else if (key == "full_intersection") config.full_intersection = parse_bool(value, line_no);
    else if (key == "seed") config.seed = static_cast<unsigned>(parse_int(value, line_no));
    else if (key == "runs") config.runs = parse_int(value, line_no);
    else if (key == "threads") config.threads = parse_int(value, line_no);
    else if (key == "verbosity") config.verbosity = parse_int(value, line_no);
    else if (key == "out") config.out_dir = value;
    else if (key == "old_mesh") config.old_mesh_file = value;
    else if (key == "new_mesh") config.new_mesh_file = value;
    else if (key == "field") config.field_file = value;
    else if (key == "mesh_type") config.mesh_type = value;
    else if (key == "adapt") config.adapt = value;
    else
      throw ParseError("line " + std::to_string(line_no) + ": unknown key '" + key + "'",
                       line_no, key);
  }
  return config;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config file " + path);
  std::stringstream buffer;
  buffer << is.rdbuf();
  return parse_config(buffer.str());
}

void RunConfig::finalize_and_validate() {
  if (out_dir.empty()) {
    const char* env = std::getenv("DGREMAP_OUT");
    out_dir = env ? env : "out";
  }
  std::vector<std::string> problems;
  const std::set<std::string> subcommands = {"interp-test", "rte1d", "rte2d", "mesh-demo",
                                             "remap"};
  if (!subcommands.count(subcommand))
    problems.push_back("unknown subcommand '" + subcommand + "'");
  if (degree < 1 || degree > 2) problems.push_back("r must be 1 or 2");
  if (cfl < 0.0 || cfl > 1.0) problems.push_back("cfl must lie in (0, 1]");
  if (!(tau > 0.0)) problems.push_back("tau must be positive");
  if (sweeps < 0) problems.push_back("sweeps must be nonnegative");
  if (!(dt > 0.0)) problems.push_back("dt must be positive");
  if (!(final_time > 0.0)) problems.push_back("T must be positive");
  if (runs < 1) problems.push_back("runs must be >= 1");
  if (threads < 1) problems.push_back("threads must be >= 1");
  if (dt_policy != "fixed" && dt_policy != "half-hmin" && dt_policy != "tenth-hmin")
    problems.push_back("dt_policy must be fixed, half-hmin, or tenth-hmin");
  for (std::size_t k = 1; k < resolutions.size(); ++k)
    if (resolutions[k] <= resolutions[k - 1])
      problems.push_back("N list must be strictly increasing");
  for (int n : resolutions)
    if (n < 1) problems.push_back("N entries must be positive");
  if (subcommand == "interp-test" || subcommand == "rte1d" || subcommand == "rte2d") {
    if (experiment.empty()) problems.push_back("experiment name is required");
  }
  if (subcommand == "remap") {
    if (old_mesh_file.empty() || new_mesh_file.empty() || field_file.empty())
      problems.push_back("remap needs old_mesh, new_mesh, and field files");
  }
  if (subcommand == "mesh-demo") {
    const std::set<std::string> types = {"uniform1d", "square4", "diag", "delaunay"};
    if (!types.count(mesh_type)) problems.push_back("unknown mesh_type '" + mesh_type + "'");
    if (!adapt.empty() && adapt != "ex1" && adapt != "ex2")
      problems.push_back("adapt must be empty, ex1, or ex2");
  }
  if (!problems.empty()) throw ValidationError(problems);
}

std::string RunConfig::to_manifest() const {
  std::ostringstream os;
  os.precision(17);
  os << "[run]\n";
  os << "subcommand = " << subcommand << "\n";
  if (!experiment.empty()) os << "experiment = " << experiment << "\n";
  if (!resolutions.empty()) {
    os << "N = ";
    for (std::size_t k = 0; k < resolutions.size(); ++k)
      os << (k ? "," : "") << resolutions[k];
    os << "\n";
  }
  os << "r = " << degree << "\n";
  os << "pp = " << (pp ? "true" : "false") << "\n";
  os << "cfl = " << cfl << "\n";
  os << "tau = " << tau << "\n";
  os << "sweeps = " << sweeps << "\n";
  os << "dt = " << dt << "\n";
  os << "T = " << final_time << "\n";
  os << "dt_policy = " << dt_policy << "\n";
  os << "fixed_mesh = " << (fixed_mesh ? "true" : "false") << "\n";
  os << "full_intersection = " << (full_intersection ? "true" : "false") << "\n";
  os << "seed = " << seed << "\n";
  os << "runs = " << runs << "\n";
  os << "threads = " << threads << "\n";
  os << "verbosity = " << verbosity << "\n";
  os << "out = " << out_dir << "\n";
  if (!old_mesh_file.empty()) os << "old_mesh = " << old_mesh_file << "\n";
  if (!new_mesh_file.empty()) os << "new_mesh = " << new_mesh_file << "\n";
  if (!field_file.empty()) os << "field = " << field_file << "\n";
  if (subcommand == "mesh-demo") {
    os << "mesh_type = " << mesh_type << "\n";
    if (!adapt.empty()) os << "adapt = " << adapt << "\n";
  }
  return os.str();
}

void write_manifest(const RunConfig& config, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write manifest " + path);
  os << config.to_manifest();
}

}  // namespace dgremap

#include "dgremap/field.hpp"

#include <limits>
#include <map>
#include <sstream>

namespace dgremap {

namespace {

// volume quadrature used for projections: exactness 2r+2
template <int D>
const QuadratureRule& projection_rule(int r) {
  static std::map<int, QuadratureRule> cache;
  auto it = cache.find(r);
  if (it == cache.end()) {
    QuadratureRule rule;
    if constexpr (D == 1)
      rule = gauss_legendre_unit(r + 2);
    else
      rule = triangle_quadrature(2 * r + 2);
    it = cache.emplace(r, std::move(rule)).first;
  }
  return it->second;
}

}  // namespace

template <int D>
DGField<D>::DGField(std::shared_ptr<const SimplicialMesh<D>> mesh, int degree)
    : mesh_(std::move(mesh)), degree_(degree) {
  n_b_ = reference_basis<D>(degree).size();
  coeffs_ = Coeffs::Zero(mesh_->n_elements(), n_b_);
  volumes_ = mesh_->volumes();
}

template <int D>
void DGField<D>::set_mesh(std::shared_ptr<const SimplicialMesh<D>> mesh) {
  if (mesh->topology().elements != mesh_->topology().elements)
    throw ValidationError("field rebind requires identical connectivity");
  mesh_ = std::move(mesh);
}

template <int D>
double DGField<D>::mass() const {
  double m = 0.0;
  const double phi0 = ReferenceBasis<D>::phi0();
  for (int e = 0; e < coeffs_.rows(); ++e) m += volumes_(e) * coeffs_(e, 0) * phi0;
  return m;
}

template <int D>
double DGField<D>::eval_ref(int e, const Point& ref) const {
  const auto& basis = reference_basis<D>(degree_);
  double v = 0.0;
  const Eigen::VectorXd phis = basis.values(ref);
  for (int j = 0; j < n_b_; ++j) v += coeffs_(e, j) * phis(j);
  return v;
}

template <int D>
double DGField<D>::eval(int e, const Point& x) const {
  return eval_ref(e, mesh_->affine_map(e).to_reference(x));
}

template <int D>
double DGField<D>::eval_global(const Point& x, int seed) const {
  const auto [e, lambda] = mesh_->locate(x, seed);
  (void)lambda;
  return eval(e, x);
}

namespace {

// limiter point set for r <= 2, volume quadrature points otherwise
template <int D>
const Eigen::MatrixXd& min_scan_table(int r) {
  if (r <= 2) return pp_basis_table<D>(r);
  static std::map<int, Eigen::MatrixXd> cache;
  auto it = cache.find(r);
  if (it == cache.end())
    it = cache.emplace(r, reference_basis<D>(r).tabulate(projection_rule<D>(r).points)).first;
  return it->second;
}

}  // namespace

template <int D>
double DGField<D>::element_min_at_pp_points(int e) const {
  const Eigen::MatrixXd& table = min_scan_table<D>(degree_);
  double vmin = std::numeric_limits<double>::infinity();
  for (int q = 0; q < table.rows(); ++q) {
    double v = 0.0;
    for (int j = 0; j < n_b_; ++j) v += table(q, j) * coeffs_(e, j);
    vmin = std::min(vmin, v);
  }
  return vmin;
}

template <int D>
double DGField<D>::min_at_pp_points() const {
  double vmin = std::numeric_limits<double>::infinity();
  for (int e = 0; e < coeffs_.rows(); ++e)
    vmin = std::min(vmin, element_min_at_pp_points(e));
  return vmin;
}

template <int D>
std::string DGField<D>::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "element,volume";
  for (int j = 0; j < n_b_; ++j) os << ",c" << j;
  os << "\n";
  for (int e = 0; e < coeffs_.rows(); ++e) {
    os << e << "," << volumes_(e);
    for (int j = 0; j < n_b_; ++j) os << "," << coeffs_(e, j);
    os << "\n";
  }
  return os.str();
}

template <int D>
DGField<D> DGField<D>::from_csv(std::shared_ptr<const SimplicialMesh<D>> mesh, int degree,
                                const std::string& csv) {
  DGField<D> field(std::move(mesh), degree);
  std::istringstream is(csv);
  std::string line;
  if (!std::getline(is, line)) throw IoError("empty field csv");
  int rows = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ls, cell, ',')) vals.push_back(std::stod(cell));
    if (static_cast<int>(vals.size()) != field.n_basis() + 2)
      throw IoError("field csv row has wrong column count");
    const int e = static_cast<int>(vals[0]);
    if (e < 0 || e >= field.coeffs().rows()) throw IoError("field csv element id out of range");
    field.volumes()(e) = vals[1];
    for (int j = 0; j < field.n_basis(); ++j) field.coeffs()(e, j) = vals[2 + j];
    ++rows;
  }
  if (rows != field.coeffs().rows()) throw IoError("field csv row count mismatch");
  return field;
}

template <int D>
DGField<D> l2_project(const std::function<double(const Eigen::Matrix<double, D, 1>&)>& f,
                      std::shared_ptr<const SimplicialMesh<D>> mesh, int degree) {
  DGField<D> field(mesh, degree);
  const auto& basis = reference_basis<D>(degree);
  const QuadratureRule& rule = projection_rule<D>(degree);
  const Eigen::MatrixXd table = basis.tabulate(rule.points);
  const int n_b = basis.size();
  for (int e = 0; e < mesh->n_elements(); ++e) {
    const AffineMap<D> map = mesh->affine_map(e);
    // coefficients are plain reference-quadrature moments: the |K|/|Khat|
    // factors of the mass matrix and the physical integral cancel
    for (int j = 0; j < n_b; ++j) {
      double c = 0.0;
      for (int q = 0; q < rule.size(); ++q) {
        Eigen::Matrix<double, D, 1> ref;
        for (int d = 0; d < D; ++d) ref(d) = rule.points(q, d);
        c += rule.weights(q) * f(map.to_physical(ref)) * table(q, j);
      }
      field.coeffs()(e, j) = c;
    }
  }
  return field;
}

template <int D>
Eigen::VectorXd vertex_values(const DGField<D>& field) {
  const auto& mesh = field.mesh();
  Eigen::VectorXd values = Eigen::VectorXd::Zero(mesh.n_vertices());
  for (int i = 0; i < mesh.n_vertices(); ++i) {
    const auto& patch = mesh.topology().vertex_elements[i];
    double sum = 0.0;
    for (int e : patch) sum += field.eval(e, mesh.vertex(i));
    values(i) = sum / static_cast<double>(patch.size());
  }
  return values;
}

template class DGField<1>;
template class DGField<2>;
template DGField<1> l2_project<1>(
    const std::function<double(const Eigen::Matrix<double, 1, 1>&)>&,
    std::shared_ptr<const SimplicialMesh<1>>, int);
template DGField<2> l2_project<2>(
    const std::function<double(const Eigen::Matrix<double, 2, 1>&)>&,
    std::shared_ptr<const SimplicialMesh<2>>, int);
template Eigen::VectorXd vertex_values<1>(const DGField<1>&);
template Eigen::VectorXd vertex_values<2>(const DGField<2>&);

}  // namespace dgremap

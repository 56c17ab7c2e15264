#include "dgremap/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace dgremap {

template <>
std::array<int, 1> MeshTopology<1>::local_facet_vertices(int f) {
  // facet f is opposite local vertex f
  return {f == 0 ? 1 : 0};
}

template <>
std::array<int, 2> MeshTopology<2>::local_facet_vertices(int f) {
  return {(f + 1) % 3, (f + 2) % 3};
}

template <int D>
std::shared_ptr<const MeshTopology<D>> MeshTopology<D>::build(
    int n_vertices, std::vector<Element> elements, std::vector<BoundaryMarker> markers) {
  auto topo = std::make_shared<MeshTopology<D>>();
  topo->n_vertices = n_vertices;
  topo->elements = std::move(elements);
  topo->markers = std::move(markers);
  const int n_elem = topo->n_elements();
  if (static_cast<int>(topo->markers.size()) != n_vertices)
    throw ValidationError("boundary marker count does not match vertex count");
  for (const auto& el : topo->elements)
    for (int v : el)
      if (v < 0 || v >= n_vertices)
        throw ValidationError("element vertex index out of range");

  // facet table keyed by sorted vertex ids
  std::map<std::array<int, D>, int> index;
  topo->element_facets.resize(n_elem);
  for (int e = 0; e < n_elem; ++e) {
    for (int f = 0; f < D + 1; ++f) {
      const auto local = local_facet_vertices(f);
      std::array<int, D> key;
      for (int k = 0; k < D; ++k) key[k] = topo->elements[e][local[k]];
      std::sort(key.begin(), key.end());
      auto it = index.find(key);
      if (it == index.end()) {
        Facet facet;
        facet.vertices = key;
        facet.elem[0] = e;
        facet.local[0] = f;
        index.emplace(key, static_cast<int>(topo->facets.size()));
        topo->element_facets[e][f] = static_cast<int>(topo->facets.size());
        topo->facets.push_back(facet);
      } else {
        Facet& facet = topo->facets[it->second];
        if (facet.elem[1] >= 0)
          throw ValidationError("facet shared by more than two elements");
        facet.elem[1] = e;
        facet.local[1] = f;
        topo->element_facets[e][f] = it->second;
      }
    }
  }
  for (const auto& facet : topo->facets) {
    if (!facet.boundary()) continue;
    for (int v : facet.vertices)
      if (topo->markers[v] == BoundaryMarker::Interior)
        throw ValidationError("vertex " + std::to_string(v) +
                              " lies on a boundary facet but is marked interior");
  }

  topo->vertex_elements.resize(n_vertices);
  for (int e = 0; e < n_elem; ++e)
    for (int v : topo->elements[e]) topo->vertex_elements[v].push_back(e);
  for (auto& patch : topo->vertex_elements) std::sort(patch.begin(), patch.end());
  return topo;
}

double simplex_signed_volume(const Eigen::Matrix<double, 1, 1>* x) {
  return x[1](0) - x[0](0);
}

double simplex_signed_volume(const Eigen::Matrix<double, 2, 1>* x) {
  const Eigen::Vector2d a = x[1] - x[0];
  const Eigen::Vector2d b = x[2] - x[0];
  return 0.5 * (a(0) * b(1) - a(1) * b(0));
}

template <int D>
double element_signed_volume(const std::vector<Eigen::Matrix<double, D, 1>>& vertices,
                             const typename MeshTopology<D>::Element& elem) {
  Eigen::Matrix<double, D, 1> x[D + 1];
  for (int k = 0; k <= D; ++k) x[k] = vertices[elem[k]];
  return simplex_signed_volume(x);
}

template <int D>
SimplicialMesh<D>::SimplicialMesh(std::shared_ptr<const MeshTopology<D>> topology,
                                  std::vector<Point> vertices)
    : topology_(std::move(topology)), vertices_(std::move(vertices)) {
  if (static_cast<int>(vertices_.size()) != topology_->n_vertices)
    throw ValidationError("vertex count does not match topology");
  compute_volumes();
  compute_boundary_tangents();
}

template <int D>
SimplicialMesh<D> SimplicialMesh<D>::create(std::vector<Point> vertices,
                                            std::vector<Element> elements,
                                            std::vector<BoundaryMarker> markers,
                                            bool normalize_orientation) {
  if (normalize_orientation) {
    for (auto& el : elements) {
      Point x[D + 1];
      for (int k = 0; k <= D; ++k) x[k] = vertices[el[k]];
      if (simplex_signed_volume(x) < 0.0) std::swap(el[D - 1], el[D]);
    }
  }
  auto topo = MeshTopology<D>::build(static_cast<int>(vertices.size()),
                                     std::move(elements), std::move(markers));
  return SimplicialMesh(std::move(topo), std::move(vertices));
}

template <int D>
void SimplicialMesh<D>::compute_volumes() {
  const int n = n_elements();
  volumes_.resize(n);
  for (int e = 0; e < n; ++e) {
    const double v = element_signed_volume<D>(vertices_, topology_->elements[e]);
    if (!(v > 0.0)) {
      std::ostringstream os;
      os << "element " << e << " has nonpositive volume " << v;
      throw DegenerateElement(os.str(), e);
    }
    volumes_(e) = v;
  }
}

template <>
void SimplicialMesh<1>::compute_boundary_tangents() {}

template <>
void SimplicialMesh<2>::compute_boundary_tangents() {
  boundary_tangents_.assign(n_vertices(), Point::Zero());
  // collect boundary edges per vertex
  std::vector<std::vector<Eigen::Vector2d>> dirs(n_vertices());
  for (const auto& facet : topology_->facets) {
    if (!facet.boundary()) continue;
    const Eigen::Vector2d t =
        (vertices_[facet.vertices[1]] - vertices_[facet.vertices[0]]).normalized();
    dirs[facet.vertices[0]].push_back(t);
    dirs[facet.vertices[1]].push_back(t);
  }
  for (int i = 0; i < n_vertices(); ++i) {
    if (topology_->markers[i] != BoundaryMarker::Boundary) continue;
    if (dirs[i].size() < 1)
      throw ValidationError("boundary vertex " + std::to_string(i) +
                            " has no boundary facet");
    Eigen::Vector2d t = dirs[i][0];
    for (const auto& s : dirs[i]) {
      const double cross = std::abs(t(0) * s(1) - t(1) * s(0));
      if (cross > 1e-9)
        throw ValidationError("boundary vertex " + std::to_string(i) +
                              " sits on a kink but is not marked as a corner");
    }
    boundary_tangents_[i] = t;
  }
}

template <int D>
const typename SimplicialMesh<D>::Point& SimplicialMesh<D>::boundary_tangent(int i) const {
  return boundary_tangents_.at(i);
}

template <>
const SimplicialMesh<1>::Point& SimplicialMesh<1>::boundary_tangent(int) const {
  throw ValidationError("1D boundary vertices are corners; no tangent");
}

template <int D>
AffineMap<D> SimplicialMesh<D>::affine_map(int e) const {
  AffineMap<D> map;
  const auto& el = topology_->elements[e];
  map.translation = vertices_[el[0]];
  for (int k = 0; k < D; ++k) map.jacobian.col(k) = vertices_[el[k + 1]] - map.translation;
  if constexpr (D == 1) {
    map.determinant = map.jacobian(0, 0);
    map.inverse(0, 0) = 1.0 / map.determinant;
  } else {
    map.determinant = map.jacobian(0, 0) * map.jacobian(1, 1) -
                      map.jacobian(0, 1) * map.jacobian(1, 0);
    map.inverse(0, 0) = map.jacobian(1, 1) / map.determinant;
    map.inverse(0, 1) = -map.jacobian(0, 1) / map.determinant;
    map.inverse(1, 0) = -map.jacobian(1, 0) / map.determinant;
    map.inverse(1, 1) = map.jacobian(0, 0) / map.determinant;
  }
  return map;
}

template <int D>
typename SimplicialMesh<D>::Point SimplicialMesh<D>::centroid(int e) const {
  Point c = Point::Zero();
  for (int v : topology_->elements[e]) c += vertices_[v];
  return c / (D + 1);
}

template <int D>
double SimplicialMesh<D>::facet_measure(int e, int f) const {
  if constexpr (D == 1) {
    (void)e;
    (void)f;
    return 1.0;
  } else {
    const auto local = MeshTopology<D>::local_facet_vertices(f);
    const auto& el = topology_->elements[e];
    return (vertices_[el[local[1]]] - vertices_[el[local[0]]]).norm();
  }
}

template <int D>
double SimplicialMesh<D>::element_height(int e) const {
  if constexpr (D == 1) return volumes_(e);
  double longest = 0.0;
  for (int f = 0; f < D + 1; ++f) longest = std::max(longest, facet_measure(e, f));
  return D * volumes_(e) / longest;
}

template <int D>
double min_element_height(const SimplicialMesh<D>& mesh) {
  double h = std::numeric_limits<double>::infinity();
  for (int e = 0; e < mesh.n_elements(); ++e) h = std::min(h, mesh.element_height(e));
  return h;
}

template <int D>
double element_volume(const SimplicialMesh<D>& mesh, int e) {
  if (e < 0 || e >= mesh.n_elements()) throw ValidationError("element id out of range");
  return mesh.volume(e);
}

template <>
SimplicialMesh<1>::Point SimplicialMesh<1>::outward_normal(int e, int f) const {
  (void)e;
  Point n;
  // positively oriented: local vertex 1 is the right end
  n(0) = (f == 0) ? 1.0 : -1.0;
  return n;
}

template <>
SimplicialMesh<2>::Point SimplicialMesh<2>::outward_normal(int e, int f) const {
  const auto local = MeshTopology<2>::local_facet_vertices(f);
  const auto& el = topology_->elements[e];
  // CCW element: edges traversed CCW have the outward normal on the right
  const Eigen::Vector2d t = vertices_[el[local[1]]] - vertices_[el[local[0]]];
  Eigen::Vector2d n(t(1), -t(0));
  return n.normalized();
}

template <int D>
Eigen::Matrix<double, D + 1, 1> SimplicialMesh<D>::barycentric(int e, const Point& x) const {
  const AffineMap<D> map = affine_map(e);
  const Point ref = map.to_reference(x);
  Eigen::Matrix<double, D + 1, 1> lambda;
  double rest = 1.0;
  for (int k = 0; k < D; ++k) {
    lambda(k + 1) = ref(k);
    rest -= ref(k);
  }
  lambda(0) = rest;
  return lambda;
}

template <int D>
std::pair<int, Eigen::Matrix<double, D + 1, 1>> SimplicialMesh<D>::locate(
    const Point& x, int seed) const {
  constexpr double tol = 1e-12;
  const int n = n_elements();
  int e = (seed >= 0 && seed < n) ? seed : 0;
  int steps_left = 4 * n + 16;
  int prev = -1;
  while (steps_left-- > 0) {
    const auto lambda = barycentric(e, x);
    int worst = 0;
    for (int k = 1; k <= D; ++k)
      if (lambda(k) < lambda(worst)) worst = k;
    if (lambda(worst) >= -tol) return {e, lambda};
    // cross the facet opposite the most negative barycentric coordinate
    const int facet_id = topology_->element_facets[e][worst];
    const auto& facet = topology_->facets[facet_id];
    const int next = facet.elem[0] == e ? facet.elem[1] : facet.elem[0];
    if (next < 0 || next == prev) break;  // hit the boundary or a cycle
    prev = e;
    e = next;
  }
  // brute force fallback
  int best = -1;
  double best_min = -std::numeric_limits<double>::infinity();
  Eigen::Matrix<double, D + 1, 1> best_lambda;
  for (int k = 0; k < n; ++k) {
    const auto lambda = barycentric(k, x);
    const double lmin = lambda.minCoeff();
    if (lmin > best_min) {
      best_min = lmin;
      best = k;
      best_lambda = lambda;
      if (lmin >= -tol) return {best, best_lambda};
    }
  }
  if (best >= 0 && best_min >= -tol) return {best, best_lambda};
  std::ostringstream os;
  os << "point (" << x.transpose() << ") not found in mesh (closest barycentric "
     << best_min << ")";
  throw PointNotFound(os.str());
}

template <int D>
MeshMotion<D>::MeshMotion(std::shared_ptr<const SimplicialMesh<D>> old_mesh,
                          std::shared_ptr<const SimplicialMesh<D>> new_mesh)
    : old_(std::move(old_mesh)), new_(std::move(new_mesh)) {
  std::vector<std::string> problems;
  if (old_->n_vertices() != new_->n_vertices())
    problems.push_back("meshes have different vertex counts");
  if (old_->topology().elements != new_->topology().elements)
    problems.push_back("meshes have different connectivity");
  if (old_->topology().markers != new_->topology().markers)
    problems.push_back("meshes have different boundary markers");
  if (!problems.empty()) throw ValidationError(problems);

  const int n = old_->n_vertices();
  displacement_.resize(n);
  double scale = 0.0;
  for (int i = 0; i < n; ++i) scale = std::max(scale, new_->vertex(i).norm());
  scale = std::max(scale, 1.0);
  for (int i = 0; i < n; ++i) {
    displacement_[i] = new_->vertex(i) - old_->vertex(i);
    max_displacement_ = std::max(max_displacement_, displacement_[i].norm());
    const BoundaryMarker m = old_->marker(i);
    if (m == BoundaryMarker::Corner) {
      if (displacement_[i].norm() > 1e-12 * scale)
        problems.push_back("corner vertex " + std::to_string(i) + " moves");
    } else if (m == BoundaryMarker::Boundary) {
      if constexpr (D == 2) {
        const auto& t = old_->boundary_tangent(i);
        const Eigen::Vector2d d = displacement_[i];
        const double off = std::abs(d(0) * t(1) - d(1) * t(0));
        if (off > 1e-10 * scale)
          problems.push_back("boundary vertex " + std::to_string(i) +
                             " leaves the boundary");
      }
    }
  }
  if (!problems.empty()) throw ValidationError(problems);
}

template <int D>
SimplicialMesh<D> MeshMotion<D>::intermediate_mesh(double sigma) const {
  if (sigma < -1e-14 || sigma > 1.0 + 1e-14)
    throw ValidationError("pseudo-time outside [0,1]");
  const int n = old_->n_vertices();
  std::vector<Point> vertices(n);
  for (int i = 0; i < n; ++i)
    vertices[i] = (1.0 - sigma) * old_->vertex(i) + sigma * new_->vertex(i);
  try {
    return SimplicialMesh<D>(old_->topology_ptr(), std::move(vertices));
  } catch (const DegenerateElement& err) {
    std::ostringstream os;
    os << "intermediate mesh collapses at sigma=" << sigma << ": " << err.what();
    throw DegenerateElement(os.str(), err.element, sigma);
  }
}

template <int D>
Eigen::Matrix<double, D, 1> velocity_field_eval(const MeshMotion<D>& motion,
                                                const SimplicialMesh<D>& mesh_at_sigma,
                                                const Eigen::Matrix<double, D, 1>& point,
                                                int element_id) {
  const auto lambda = mesh_at_sigma.barycentric(element_id, point);
  if (lambda.minCoeff() < -1e-12 || lambda.maxCoeff() > 1.0 + 1e-12)
    throw PointOutsideElement("point is not inside the requested element");
  Eigen::Matrix<double, D, 1> v = Eigen::Matrix<double, D, 1>::Zero();
  const auto& el = mesh_at_sigma.element(element_id);
  for (int k = 0; k <= D; ++k) v += lambda(k) * motion.displacement()[el[k]];
  return v;
}

template <int D>
double velocity_divergence(const MeshMotion<D>& motion,
                           const SimplicialMesh<D>& mesh_at_sigma, int element_id) {
  // Xdot is linear on the element: div Xdot = sum_a xdot_a . grad lambda_a.
  const AffineMap<D> map = mesh_at_sigma.affine_map(element_id);
  const auto& el = mesh_at_sigma.element(element_id);
  // grad of reference coordinates: rows of inverse jacobian
  double div = 0.0;
  Eigen::Matrix<double, D, 1> grad0 = Eigen::Matrix<double, D, 1>::Zero();
  for (int k = 0; k < D; ++k) {
    const Eigen::Matrix<double, D, 1> gk = map.inverse.row(k).transpose();
    grad0 -= gk;
    div += motion.displacement()[el[k + 1]].dot(gk);
  }
  div += motion.displacement()[el[0]].dot(grad0);
  return div;
}

template struct MeshTopology<1>;
template struct MeshTopology<2>;
template class SimplicialMesh<1>;
template class SimplicialMesh<2>;
template class MeshMotion<1>;
template class MeshMotion<2>;
template double element_signed_volume<1>(const std::vector<Eigen::Matrix<double, 1, 1>>&,
                                         const MeshTopology<1>::Element&);
template double element_signed_volume<2>(const std::vector<Eigen::Matrix<double, 2, 1>>&,
                                         const MeshTopology<2>::Element&);
template double element_volume<1>(const SimplicialMesh<1>&, int);
template double element_volume<2>(const SimplicialMesh<2>&, int);
template double min_element_height<1>(const SimplicialMesh<1>&);
template double min_element_height<2>(const SimplicialMesh<2>&);
template Eigen::Matrix<double, 1, 1> velocity_field_eval<1>(
    const MeshMotion<1>&, const SimplicialMesh<1>&, const Eigen::Matrix<double, 1, 1>&, int);
template Eigen::Matrix<double, 2, 1> velocity_field_eval<2>(
    const MeshMotion<2>&, const SimplicialMesh<2>&, const Eigen::Matrix<double, 2, 1>&, int);
template double velocity_divergence<1>(const MeshMotion<1>&, const SimplicialMesh<1>&, int);
template double velocity_divergence<2>(const MeshMotion<2>&, const SimplicialMesh<2>&, int);

}  // namespace dgremap

// Simplicial meshes (intervals, triangles), their deformation kinematics, and
// geometry queries.
#pragma once

#include <Eigen/Dense>
#include <array>
#include <memory>
#include <vector>

#include "dgremap/errors.hpp"

namespace dgremap {

enum class BoundaryMarker : unsigned char { Interior = 0, Boundary = 1, Corner = 2 };

// Connectivity and boundary classification; invariant under mesh motion and
// shared between all meshes of one deformation family.
template <int D>
struct MeshTopology {
  using Element = std::array<int, D + 1>;

  // A facet of the mesh in canonical orientation: vertex indices ascending.
  // elem[1] = -1 on the domain boundary.
  struct Facet {
    std::array<int, D> vertices;
    std::array<int, 2> elem = {-1, -1};
    std::array<int, 2> local = {-1, -1};
    bool boundary() const { return elem[1] < 0; }
  };

  int n_vertices = 0;
  std::vector<Element> elements;
  std::vector<BoundaryMarker> markers;
  std::vector<Facet> facets;
  std::vector<std::array<int, D + 1>> element_facets;  // facet id per local facet
  std::vector<std::vector<int>> vertex_elements;       // sorted patches

  int n_elements() const { return static_cast<int>(elements.size()); }

  // Local facet f of an element is opposite local vertex f.
  static std::array<int, D> local_facet_vertices(int f);

  static std::shared_ptr<const MeshTopology> build(int n_vertices,
                                                   std::vector<Element> elements,
                                                   std::vector<BoundaryMarker> markers);
};

// Affine map F: Khat -> K from the reference element.
template <int D>
struct AffineMap {
  using Point = Eigen::Matrix<double, D, 1>;
  using Mat = Eigen::Matrix<double, D, D>;

  Mat jacobian;       // F'
  Point translation;  // first vertex
  Mat inverse;        // (F')^{-1}
  double determinant = 0.0;

  Point to_physical(const Point& ref) const { return translation + jacobian * ref; }
  Point to_reference(const Point& x) const { return inverse * (x - translation); }
};

template <int D>
class SimplicialMesh {
 public:
  using Point = Eigen::Matrix<double, D, 1>;
  using Element = typename MeshTopology<D>::Element;

  SimplicialMesh(std::shared_ptr<const MeshTopology<D>> topology,
                 std::vector<Point> vertices);

  // Builds topology from raw connectivity.  Flips negatively oriented
  // elements when normalize_orientation is set (file input, mesh generators);
  // otherwise a nonpositive element volume is an error.
  static SimplicialMesh create(std::vector<Point> vertices,
                               std::vector<Element> elements,
                               std::vector<BoundaryMarker> markers,
                               bool normalize_orientation = false);

  const MeshTopology<D>& topology() const { return *topology_; }
  std::shared_ptr<const MeshTopology<D>> topology_ptr() const { return topology_; }
  int n_vertices() const { return static_cast<int>(vertices_.size()); }
  int n_elements() const { return topology_->n_elements(); }
  const std::vector<Point>& vertices() const { return vertices_; }
  const Point& vertex(int i) const { return vertices_[i]; }
  const Element& element(int e) const { return topology_->elements[e]; }
  BoundaryMarker marker(int i) const { return topology_->markers[i]; }

  double volume(int e) const { return volumes_[e]; }
  const Eigen::VectorXd& volumes() const { return volumes_; }
  double domain_measure() const { return volumes_.sum(); }

  AffineMap<D> affine_map(int e) const;
  Point centroid(int e) const;

  // smallest element height: d |K| / (longest facet measure); element length in 1D
  double element_height(int e) const;

  // unit outward normal of local facet f of element e
  Point outward_normal(int e, int f) const;
  double facet_measure(int e, int f) const;

  // barycentric coordinates of x in element e (sums to 1)
  Eigen::Matrix<double, D + 1, 1> barycentric(int e, const Point& x) const;

  // containing element and barycentric weights; walk from seed with
  // brute-force fallback.  Throws PointNotFound outside the domain.
  std::pair<int, Eigen::Matrix<double, D + 1, 1>> locate(const Point& x,
                                                         int seed = 0) const;

  // unit tangent of the boundary at a Boundary-marked vertex
  const Point& boundary_tangent(int i) const;

 private:
  std::shared_ptr<const MeshTopology<D>> topology_;
  std::vector<Point> vertices_;
  Eigen::VectorXd volumes_;
  std::vector<Point> boundary_tangents_;  // indexed by vertex; zero if unused

  void compute_volumes();
  void compute_boundary_tangents();
};

// Signed measure of the simplex spanned by the given points.
double simplex_signed_volume(const Eigen::Matrix<double, 1, 1>* x);
double simplex_signed_volume(const Eigen::Matrix<double, 2, 1>* x);

template <int D>
double element_signed_volume(const std::vector<Eigen::Matrix<double, D, 1>>& vertices,
                             const typename MeshTopology<D>::Element& elem);

// [OP] element_volume: positive measure with a degeneracy check.
template <int D>
double element_volume(const SimplicialMesh<D>& mesh, int e);

// [OP] min_element_height
template <int D>
double min_element_height(const SimplicialMesh<D>& mesh);

// A deformation between two meshes of identical connectivity.
template <int D>
class MeshMotion {
 public:
  using Point = Eigen::Matrix<double, D, 1>;

  MeshMotion(std::shared_ptr<const SimplicialMesh<D>> old_mesh,
             std::shared_ptr<const SimplicialMesh<D>> new_mesh);

  const SimplicialMesh<D>& old_mesh() const { return *old_; }
  const SimplicialMesh<D>& new_mesh() const { return *new_; }
  std::shared_ptr<const SimplicialMesh<D>> old_ptr() const { return old_; }
  std::shared_ptr<const SimplicialMesh<D>> new_ptr() const { return new_; }

  // nodal velocity xdot_i = x_i^new - x_i^old
  const std::vector<Point>& displacement() const { return displacement_; }
  double max_displacement() const { return max_displacement_; }

  // mesh at pseudo-time sigma in [0,1]; vertices (1-s) x_old + s x_new
  SimplicialMesh<D> intermediate_mesh(double sigma) const;

  bool is_identity(double tol = 0.0) const { return max_displacement_ <= tol; }

 private:
  std::shared_ptr<const SimplicialMesh<D>> old_;
  std::shared_ptr<const SimplicialMesh<D>> new_;
  std::vector<Point> displacement_;
  double max_displacement_ = 0.0;
};

// [OP] velocity_field_eval: piecewise linear velocity Xdot at a point of the
// sigma-mesh, evaluated on the given element.
template <int D>
Eigen::Matrix<double, D, 1> velocity_field_eval(const MeshMotion<D>& motion,
                                                const SimplicialMesh<D>& mesh_at_sigma,
                                                const Eigen::Matrix<double, D, 1>& point,
                                                int element_id);

// divergence of the piecewise linear velocity on an element of the stage mesh
template <int D>
double velocity_divergence(const MeshMotion<D>& motion,
                           const SimplicialMesh<D>& mesh_at_sigma, int element_id);

extern template struct MeshTopology<1>;
extern template struct MeshTopology<2>;
extern template class SimplicialMesh<1>;
extern template class SimplicialMesh<2>;
extern template class MeshMotion<1>;
extern template class MeshMotion<2>;

}  // namespace dgremap

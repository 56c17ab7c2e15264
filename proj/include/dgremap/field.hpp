// Per-element polynomial fields over a simplicial mesh.
#pragma once

#include <functional>
#include <memory>
#include <string>

#include "dgremap/basis.hpp"
#include "dgremap/mesh.hpp"

namespace dgremap {

// Modal DG field of degree r.  Coefficients are w.r.t. the orthonormal
// reference basis composed with the element map, so the cell average is
// coeff(e,0) * phi0 and the reference mass matrix is the identity scaled by
// |K| / |Khat|.  Element volumes are tracked separately from the geometry so
// the interpolation scheme can maintain them with its own update rule.
template <int D>
class DGField {
 public:
  using Point = Eigen::Matrix<double, D, 1>;
  using Coeffs = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  DGField(std::shared_ptr<const SimplicialMesh<D>> mesh, int degree);

  const SimplicialMesh<D>& mesh() const { return *mesh_; }
  std::shared_ptr<const SimplicialMesh<D>> mesh_ptr() const { return mesh_; }
  int degree() const { return degree_; }
  int n_basis() const { return n_b_; }

  Coeffs& coeffs() { return coeffs_; }
  const Coeffs& coeffs() const { return coeffs_; }
  Eigen::VectorXd& volumes() { return volumes_; }
  const Eigen::VectorXd& volumes() const { return volumes_; }

  // rebind to a different mesh of the same topology (after remapping)
  void set_mesh(std::shared_ptr<const SimplicialMesh<D>> mesh);

  double cell_average(int e) const {
    return coeffs_(e, 0) * ReferenceBasis<D>::phi0();
  }
  void shift_cell_average(int e, double delta) {
    coeffs_(e, 0) += delta / ReferenceBasis<D>::phi0();
  }

  // sum_K |K| mean_K with the tracked volumes, fixed summation order
  double mass() const;

  // value at a reference point of element e
  double eval_ref(int e, const Point& ref) const;
  // value at a physical point inside element e
  double eval(int e, const Point& x) const;
  // locate-and-evaluate
  double eval_global(const Point& x, int seed = 0) const;

  // minimum over the limiter point set G_K of every element
  double min_at_pp_points() const;
  // minimum over the G_K points of one element
  double element_min_at_pp_points(int e) const;

  std::string to_csv() const;
  static DGField from_csv(std::shared_ptr<const SimplicialMesh<D>> mesh, int degree,
                          const std::string& csv);

 private:
  std::shared_ptr<const SimplicialMesh<D>> mesh_;
  int degree_;
  int n_b_;
  Coeffs coeffs_;
  Eigen::VectorXd volumes_;
};

// Element-wise L2 projection of an analytic function.
template <int D>
DGField<D> l2_project(const std::function<double(const Eigen::Matrix<double, D, 1>&)>& f,
                      std::shared_ptr<const SimplicialMesh<D>> mesh, int degree);

// Discontinuity-respecting vertex samples: average of the incident elements'
// polynomial values at the vertex.
template <int D>
Eigen::VectorXd vertex_values(const DGField<D>& field);

extern template class DGField<1>;
extern template class DGField<2>;

}  // namespace dgremap

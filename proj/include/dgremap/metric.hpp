// Hessian recovery and the metric tensor driving mesh adaptation.
#pragma once

#include <vector>

#include "dgremap/mesh.hpp"

namespace dgremap {

// Per-element SPD matrices prescribing target element size and shape.
template <int D>
struct MetricField {
  using Mat = Eigen::Matrix<double, D, D>;
  std::vector<Mat> tensors;  // one per element

  int size() const { return static_cast<int>(tensors.size()); }
  static MetricField identity(int n_elements) {
    MetricField m;
    m.tensors.assign(n_elements, Mat::Identity());
    return m;
  }
};

// Quadratic least-squares fit of nodal values over each vertex's star
// (enlarged by a ring when rank deficient); per-element Hessian is the mean
// of its vertices' recovered Hessians.
template <int D>
std::vector<Eigen::Matrix<double, D, D>> hessian_recovery(const SimplicialMesh<D>& mesh,
                                                          const Eigen::VectorXd& nodal_values);

// M = det(I + |H|)^{-1/(d+4)} (I + |H|) with |H| from the eigen-decomposition.
template <int D>
Eigen::Matrix<double, D, D> metric_from_hessian(const Eigen::Matrix<double, D, D>& hessian);

// Recover the Hessian of nodal data and build the metric field.
template <int D>
MetricField<D> metric_from_nodal_values(const SimplicialMesh<D>& mesh,
                                        const Eigen::VectorXd& nodal_values);

// Smallest SPD bound of two SPD matrices via simultaneous diagonalization.
template <int D>
Eigen::Matrix<double, D, D> metric_pair_intersection(const Eigen::Matrix<double, D, D>& a,
                                                     const Eigen::Matrix<double, D, D>& b);

// Fold pairwise intersection over the list in order.
template <int D>
MetricField<D> metric_intersection(const std::vector<MetricField<D>>& fields);

// CSV dump: element id followed by the row-major tensor entries.
template <int D>
std::string metric_to_csv(const MetricField<D>& metric);

}  // namespace dgremap

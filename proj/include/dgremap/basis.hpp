// Modal polynomial bases on the reference interval and triangle, plus the
// point sets used by the positivity limiter.
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "dgremap/quadrature.hpp"

namespace dgremap {

// Orthonormal (modal) basis of P^r on the reference element with respect to
// the reference L2 inner product.  Reference elements: [0,1] in 1D, the
// triangle (0,0)-(1,0)-(0,1) in 2D.  The first function is constant, so a
// field's cell average is coeff[0] * phi0.
template <int D>
class ReferenceBasis {
 public:
  using RefPoint = Eigen::Matrix<double, D, 1>;

  explicit ReferenceBasis(int degree);

  int degree() const { return degree_; }
  int size() const { return n_b_; }
  static constexpr double reference_measure() { return D == 1 ? 1.0 : 0.5; }
  // value of the constant basis function (1/sqrt(|Khat|))
  static double phi0() { return D == 1 ? 1.0 : std::sqrt(2.0); }

  // single basis function value / gradient at a reference point
  double value(int j, const RefPoint& x) const;
  Eigen::Matrix<double, D, 1> gradient(int j, const RefPoint& x) const;

  // all basis values at a point (n_b vector)
  Eigen::VectorXd values(const RefPoint& x) const;

  // tabulate values (n_points x n_b) at quadrature points
  Eigen::MatrixXd tabulate(const Eigen::MatrixXd& ref_points) const;
  // tabulate gradient component d at quadrature points
  Eigen::MatrixXd tabulate_gradient(const Eigen::MatrixXd& ref_points, int d) const;

 private:
  int degree_;
  int n_b_;
  // coefficients over monomials, row j = basis function j
  Eigen::MatrixXd coeff_;
  // monomial exponents (n_b x D)
  Eigen::MatrixXi expo_;
};

// Shared immutable basis instance for a given degree.
template <int D>
const ReferenceBasis<D>& reference_basis(int degree);

// The limiter point set G_K on the reference element, including every facet
// quadrature point used by the interpolation flux integrals.
// 1D: Gauss-Lobatto points with 2 n_g - 3 >= r.
// 2D: warped Gauss-Lobatto x Gauss points from the three vertex orientations.
// Supported degrees r = 1, 2.
template <int D>
Eigen::MatrixXd pp_point_set(int r);

// Number of facet quadrature points per facet used by flux integrals (r+1
// Gauss points; in 1D a facet is a single point).
inline int facet_quadrature_size(int dim, int r) { return dim == 1 ? 1 : r + 1; }

// Cached basis values at the limiter point set (n_points x n_b).
template <int D>
const Eigen::MatrixXd& pp_basis_table(int r);

// First Gauss-Lobatto weight \hat w_1 entering the positivity CFL bound.
double pp_first_lobatto_weight(int r);

}  // namespace dgremap

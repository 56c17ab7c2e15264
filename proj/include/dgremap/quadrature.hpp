// Spatial quadrature rules on the reference interval and triangle.
#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace dgremap {

// A quadrature rule on a reference domain.  Points are reference coordinates
// (1 column per point in 1D, 2 in 2D); weights include the reference measure,
// so sum(weights) equals the measure of the domain.
struct QuadratureRule {
  Eigen::MatrixXd points;   // n_points x dim
  Eigen::VectorXd weights;  // n_points
  int exactness = 0;        // integrates polynomials up to this total degree

  int size() const { return static_cast<int>(weights.size()); }
  std::string to_csv() const;
};

// Gauss-Legendre rule on [-1,1], exact for degree 2n-1.
QuadratureRule gauss_legendre(int n);

// Gauss-Lobatto rule on [0,1] with both endpoints as nodes; n >= 2.
// The first weight (at x=0) is the \hat w_1 of the positivity CFL bound.
QuadratureRule gauss_lobatto(int n);

// Symmetric positive-weight rule on the reference triangle
// {(x,y): x>=0, y>=0, x+y<=1}; weights sum to 1/2.
// Throws UnsupportedDegree above the implemented maximum.
QuadratureRule triangle_quadrature(int exactness_degree);
int triangle_quadrature_max_degree();

// Gauss-Legendre rule mapped to [0,1] (weights sum to 1).
QuadratureRule gauss_legendre_unit(int n);

// Legendre polynomial P_n and derivative at x (on [-1,1]).
double legendre(int n, double x);
double legendre_derivative(int n, double x);

}  // namespace dgremap

// Angular quadrature for the discrete ordinate method.
#pragma once

#include <Eigen/Dense>
#include <vector>

namespace dgremap {

// Discrete directions and weights.  Weights are normalized so they sum to 1:
// the scattering term is sigma_s * sum_m w_m I_m with no extra constant.
template <int D>
struct AngularQuadrature {
  using Direction = Eigen::Matrix<double, D, 1>;
  std::vector<Direction> directions;
  Eigen::VectorXd weights;

  int size() const { return static_cast<int>(directions.size()); }
};

// 1D ordinates: n-point Gauss-Legendre nodes mu_m on (-1,1), ascending, with
// half-normalized weights.
AngularQuadrature<1> gauss_legendre_angles(int n);

// 2D ordinates: Legendre-Chebyshev rule.  Nodes
//   zeta_m = sqrt(1-mu_i^2) cos(phi_j), eta_m = sqrt(1-mu_i^2) sin(phi_j)
// with mu_i the N_l Legendre roots, phi_j = (2j-1) pi / N_c, and the fixed
// ordering m = (i-1) N_c + j.  Weights (w_i/2)(1/N_c) sum to 1.
AngularQuadrature<2> legendre_chebyshev(int n_l, int n_c);

// Single fixed direction with unit weight (transparent-model runs).
AngularQuadrature<2> single_direction(double zeta, double eta);

}  // namespace dgremap

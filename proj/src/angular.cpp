#include "dgremap/angular.hpp"

#include <cmath>

#include "dgremap/errors.hpp"
#include "dgremap/quadrature.hpp"

namespace dgremap {

AngularQuadrature<1> gauss_legendre_angles(int n) {
  const QuadratureRule rule = gauss_legendre(n);
  AngularQuadrature<1> angles;
  angles.directions.resize(n);
  angles.weights.resize(n);
  for (int m = 0; m < n; ++m) {
    angles.directions[m](0) = rule.points(m, 0);
    angles.weights(m) = 0.5 * rule.weights(m);
  }
  return angles;
}

AngularQuadrature<2> legendre_chebyshev(int n_l, int n_c) {
  if (n_l < 1 || n_c < 1) throw ValidationError("legendre_chebyshev requires N_l, N_c >= 1");
  const QuadratureRule leg = gauss_legendre(n_l);
  AngularQuadrature<2> angles;
  const int n_a = n_l * n_c;
  angles.directions.resize(n_a);
  angles.weights.resize(n_a);
  for (int i = 1; i <= n_l; ++i) {
    const double mu = leg.points(i - 1, 0);
    const double s = std::sqrt(1.0 - mu * mu);
    for (int j = 1; j <= n_c; ++j) {
      const double phi = (2 * j - 1) * M_PI / n_c;
      const int m = (i - 1) * n_c + j - 1;
      angles.directions[m] = Eigen::Vector2d(s * std::cos(phi), s * std::sin(phi));
      angles.weights(m) = 0.5 * leg.weights(i - 1) / n_c;
    }
  }
  return angles;
}

AngularQuadrature<2> single_direction(double zeta, double eta) {
  AngularQuadrature<2> angles;
  angles.directions = {Eigen::Vector2d(zeta, eta)};
  angles.weights = Eigen::VectorXd::Ones(1);
  return angles;
}

}  // namespace dgremap

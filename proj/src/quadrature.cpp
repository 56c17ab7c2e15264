#include "dgremap/quadrature.hpp"

#include <cmath>
#include <sstream>

#include "dgremap/errors.hpp"

namespace dgremap {

double legendre(int n, double x) {
  double p0 = 1.0, p1 = x;
  if (n == 0) return p0;
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

double legendre_derivative(int n, double x) {
  if (n == 0) return 0.0;
  // (1-x^2) P_n' = n (P_{n-1} - x P_n)
  const double denom = 1.0 - x * x;
  if (std::abs(denom) > 1e-10)
    return n * (legendre(n - 1, x) - x * legendre(n, x)) / denom;
  // endpoint value P_n'(+-1) = (+-1)^{n-1} n(n+1)/2
  const double sign = (x > 0 || n % 2 == 1) ? 1.0 : -1.0;
  return sign * 0.5 * n * (n + 1);
}

QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw UnsupportedDegree("gauss_legendre requires n >= 1");
  QuadratureRule rule;
  rule.points.resize(n, 1);
  rule.weights.resize(n);
  rule.exactness = 2 * n - 1;
  for (int i = 0; i < n; ++i) {
    // Chebyshev initial guess, then Newton on P_n
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const double f = legendre(n, x);
      const double df = legendre_derivative(n, x);
      const double dx = f / df;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = legendre_derivative(n, x);
    rule.points(i, 0) = x;
    rule.weights(i) = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  // ascending order
  for (int i = 0; i < n / 2; ++i) {
    std::swap(rule.points(i, 0), rule.points(n - 1 - i, 0));
    std::swap(rule.weights(i), rule.weights(n - 1 - i));
  }
  return rule;
}

QuadratureRule gauss_legendre_unit(int n) {
  QuadratureRule rule = gauss_legendre(n);
  rule.points = (rule.points.array() + 1.0) * 0.5;
  rule.weights *= 0.5;
  return rule;
}

QuadratureRule gauss_lobatto(int n) {
  if (n < 2) throw UnsupportedDegree("gauss_lobatto requires n >= 2");
  QuadratureRule rule;
  rule.points.resize(n, 1);
  rule.weights.resize(n);
  rule.exactness = 2 * n - 3;
  // nodes on [-1,1]: endpoints plus roots of P'_{n-1}
  std::vector<double> x(n);
  x[0] = -1.0;
  x[n - 1] = 1.0;
  for (int i = 1; i < n - 1; ++i) {
    double xi = -std::cos(M_PI * i / (n - 1));  // Chebyshev-Lobatto guess
    for (int it = 0; it < 100; ++it) {
      // Newton on f = P'_{n-1}; f' from the Legendre ODE:
      // (1-x^2) P'' = 2x P' - n(n-1) P
      const double f = legendre_derivative(n - 1, xi);
      const double fp =
          (2.0 * xi * f - (n - 1) * n * legendre(n - 1, xi)) / (1.0 - xi * xi);
      const double dx = f / fp;
      xi -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    x[i] = xi;
  }
  for (int i = 0; i < n; ++i) {
    const double p = legendre(n - 1, x[i]);
    const double w = 2.0 / (n * (n - 1) * p * p);
    rule.points(i, 0) = 0.5 * (x[i] + 1.0);  // map to [0,1]
    rule.weights(i) = 0.5 * w;
  }
  if (n == 2) {
    rule.points(0, 0) = 0.0;
    rule.points(1, 0) = 1.0;
  }
  return rule;
}

namespace {

struct TriOrbit {
  // permutation orbit of barycentric coordinates (a,b,c); weight is relative
  // (orbit weights over a rule sum to 1)
  double a, b, c, w;
};

void append_orbit(std::vector<std::array<double, 3>>& pts, std::vector<double>& wts,
                  const TriOrbit& o) {
  const double eps = 1e-14;
  std::vector<std::array<double, 3>> perms = {
      {o.a, o.b, o.c}, {o.b, o.c, o.a}, {o.c, o.a, o.b},
      {o.a, o.c, o.b}, {o.c, o.b, o.a}, {o.b, o.a, o.c}};
  std::vector<std::array<double, 3>> unique;
  for (const auto& p : perms) {
    bool seen = false;
    for (const auto& q : unique)
      if (std::abs(p[0] - q[0]) < eps && std::abs(p[1] - q[1]) < eps) seen = true;
    if (!seen) unique.push_back(p);
  }
  for (const auto& p : unique) {
    pts.push_back(p);
    wts.push_back(o.w);
  }
}

QuadratureRule triangle_rule_from_orbits(const std::vector<TriOrbit>& orbits, int degree) {
  std::vector<std::array<double, 3>> pts;
  std::vector<double> wts;
  for (const auto& o : orbits) append_orbit(pts, wts, o);
  QuadratureRule rule;
  const int n = static_cast<int>(pts.size());
  rule.points.resize(n, 2);
  rule.weights.resize(n);
  rule.exactness = degree;
  for (int i = 0; i < n; ++i) {
    // barycentric (l0,l1,l2) -> reference coordinates with vertices
    // (0,0), (1,0), (0,1)
    rule.points(i, 0) = pts[i][1];
    rule.points(i, 1) = pts[i][2];
    rule.weights(i) = 0.5 * wts[i];
  }
  return rule;
}

}  // namespace

int triangle_quadrature_max_degree() { return 6; }

QuadratureRule triangle_quadrature(int degree) {
  const double third = 1.0 / 3.0;
  if (degree <= 1) {
    return triangle_rule_from_orbits({{third, third, third, 1.0}}, 1);
  }
  if (degree == 2) {
    return triangle_rule_from_orbits({{2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, third}}, 2);
  }
  if (degree <= 4) {
    return triangle_rule_from_orbits(
        {{0.816847572980459, 0.091576213509771, 0.091576213509771, 0.109951743655322},
         {0.108103018168070, 0.445948490915965, 0.445948490915965, 0.223381589678011}},
        4);
  }
  if (degree == 5) {
    return triangle_rule_from_orbits(
        {{third, third, third, 0.225},
         {0.059715871789770, 0.470142064105115, 0.470142064105115, 0.132394152788506},
         {0.797426985353087, 0.101286507323456, 0.101286507323456, 0.125939180544827}},
        5);
  }
  if (degree == 6) {
    return triangle_rule_from_orbits(
        {{0.873821971016996, 0.063089014491502, 0.063089014491502, 0.050844906370207},
         {0.501426509658179, 0.249286745170910, 0.249286745170910, 0.116786275726379},
         {0.636502499121399, 0.310352451033785, 0.053145049844816, 0.082851075618374}},
        6);
  }
  throw UnsupportedDegree("triangle quadrature implemented up to degree " +
                          std::to_string(triangle_quadrature_max_degree()) +
                          ", requested " + std::to_string(degree));
}

std::string QuadratureRule::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  const int dim = static_cast<int>(points.cols());
  os << (dim == 1 ? "x" : "x,y") << ",weight\n";
  for (int i = 0; i < size(); ++i) {
    for (int d = 0; d < dim; ++d) os << points(i, d) << ",";
    os << weights(i) << "\n";
  }
  return os.str();
}

}  // namespace dgremap

#include "dgremap/basis.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "dgremap/errors.hpp"

namespace dgremap {

namespace {

double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

// exact monomial integrals over the reference elements
double monomial_integral_1d(int m) { return 1.0 / (m + 1); }
double monomial_integral_tri(int m, int n) {
  return factorial(m) * factorial(n) / factorial(m + n + 2);
}

}  // namespace

template <int D>
ReferenceBasis<D>::ReferenceBasis(int degree) : degree_(degree) {
  if (degree < 1) throw UnsupportedDegree("basis degree must be >= 1");
  if constexpr (D == 1) {
    n_b_ = degree + 1;
    expo_.resize(n_b_, 1);
    for (int j = 0; j < n_b_; ++j) expo_(j, 0) = j;
  } else {
    n_b_ = (degree + 1) * (degree + 2) / 2;
    expo_.resize(n_b_, 2);
    int k = 0;
    for (int total = 0; total <= degree; ++total)
      for (int mx = total; mx >= 0; --mx) {
        expo_(k, 0) = mx;
        expo_(k, 1) = total - mx;
        ++k;
      }
  }
  // Gram matrix of monomials from exact integrals, then basis = L^{-1} m
  Eigen::MatrixXd gram(n_b_, n_b_);
  for (int i = 0; i < n_b_; ++i)
    for (int j = 0; j < n_b_; ++j) {
      if constexpr (D == 1)
        gram(i, j) = monomial_integral_1d(expo_(i, 0) + expo_(j, 0));
      else
        gram(i, j) = monomial_integral_tri(expo_(i, 0) + expo_(j, 0),
                                           expo_(i, 1) + expo_(j, 1));
    }
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success)
    throw UnsupportedDegree("monomial Gram matrix not SPD at this degree");
  Eigen::MatrixXd lower = llt.matrixL();
  coeff_ = lower.template triangularView<Eigen::Lower>().solve(
      Eigen::MatrixXd::Identity(n_b_, n_b_));
}

template <int D>
double ReferenceBasis<D>::value(int j, const RefPoint& x) const {
  double v = 0.0;
  for (int k = 0; k <= j; ++k) {
    if (coeff_(j, k) == 0.0) continue;
    double m = std::pow(x(0), expo_(k, 0));
    if constexpr (D == 2) m *= std::pow(x(1), expo_(k, 1));
    v += coeff_(j, k) * m;
  }
  return v;
}

template <int D>
Eigen::Matrix<double, D, 1> ReferenceBasis<D>::gradient(int j, const RefPoint& x) const {
  Eigen::Matrix<double, D, 1> g = Eigen::Matrix<double, D, 1>::Zero();
  for (int k = 0; k <= j; ++k) {
    if (coeff_(j, k) == 0.0) continue;
    for (int d = 0; d < D; ++d) {
      const int e = expo_(k, d);
      if (e == 0) continue;
      double m = e * std::pow(x(d), e - 1);
      for (int o = 0; o < D; ++o)
        if (o != d) m *= std::pow(x(o), expo_(k, o));
      g(d) += coeff_(j, k) * m;
    }
  }
  return g;
}

template <int D>
Eigen::VectorXd ReferenceBasis<D>::values(const RefPoint& x) const {
  Eigen::VectorXd mono(n_b_);
  for (int k = 0; k < n_b_; ++k) {
    double m = std::pow(x(0), expo_(k, 0));
    if constexpr (D == 2) m *= std::pow(x(1), expo_(k, 1));
    mono(k) = m;
  }
  return coeff_ * mono;
}

template <int D>
Eigen::MatrixXd ReferenceBasis<D>::tabulate(const Eigen::MatrixXd& pts) const {
  const int n = static_cast<int>(pts.rows());
  Eigen::MatrixXd table(n, n_b_);
  for (int q = 0; q < n; ++q) {
    RefPoint x;
    for (int d = 0; d < D; ++d) x(d) = pts(q, d);
    table.row(q) = values(x).transpose();
  }
  return table;
}

template <int D>
Eigen::MatrixXd ReferenceBasis<D>::tabulate_gradient(const Eigen::MatrixXd& pts,
                                                     int dcomp) const {
  const int n = static_cast<int>(pts.rows());
  Eigen::MatrixXd table(n, n_b_);
  for (int q = 0; q < n; ++q) {
    RefPoint x;
    for (int d = 0; d < D; ++d) x(d) = pts(q, d);
    for (int j = 0; j < n_b_; ++j) table(q, j) = gradient(j, x)(dcomp);
  }
  return table;
}

template <int D>
const ReferenceBasis<D>& reference_basis(int degree) {
  static std::map<int, ReferenceBasis<D>> cache;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(degree);
  if (it == cache.end()) it = cache.emplace(degree, ReferenceBasis<D>(degree)).first;
  return it->second;
}

double pp_first_lobatto_weight(int r) {
  if (r == 1) return 0.5;
  if (r == 2) return 1.0 / 6.0;
  throw UnsupportedDegree("positivity limiter point sets cover r = 1, 2");
}

namespace {

int lobatto_count(int r) {
  // smallest n_g with 2 n_g - 3 >= r
  int n = 2;
  while (2 * n - 3 < r) ++n;
  return n;
}

}  // namespace

template <>
Eigen::MatrixXd pp_point_set<1>(int r) {
  if (r != 1 && r != 2)
    throw UnsupportedDegree("positivity limiter point sets cover r = 1, 2");
  return gauss_lobatto(lobatto_count(r)).points;
}

template <>
Eigen::MatrixXd pp_point_set<2>(int r) {
  if (r != 1 && r != 2)
    throw UnsupportedDegree("positivity limiter point sets cover r = 1, 2");
  const QuadratureRule lob = gauss_lobatto(lobatto_count(r));
  const QuadratureRule gau = gauss_legendre_unit(r + 1);
  const Eigen::Vector2d vertex[3] = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
  std::vector<Eigen::Vector2d> pts;
  for (int j = 0; j < 3; ++j) {
    const Eigen::Vector2d& a = vertex[j];
    const Eigen::Vector2d& b = vertex[(j + 1) % 3];
    const Eigen::Vector2d& c = vertex[(j + 2) % 3];
    for (int iu = 0; iu < lob.size(); ++iu) {
      const double u = lob.points(iu, 0);
      for (int ig = 0; ig < gau.size(); ++ig) {
        const double g = gau.points(ig, 0);
        const Eigen::Vector2d edge = (1.0 - g) * b + g * c;
        const Eigen::Vector2d p = u * a + (1.0 - u) * edge;
        bool seen = false;
        for (const auto& q : pts)
          if ((p - q).norm() < 1e-13) seen = true;
        if (!seen) pts.push_back(p);
      }
    }
  }
  Eigen::MatrixXd out(static_cast<int>(pts.size()), 2);
  for (int i = 0; i < out.rows(); ++i) out.row(i) = pts[i].transpose();
  return out;
}

template <int D>
const Eigen::MatrixXd& pp_basis_table(int r) {
  static std::map<int, Eigen::MatrixXd> cache;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(r);
  if (it == cache.end())
    it = cache.emplace(r, reference_basis<D>(r).tabulate(pp_point_set<D>(r))).first;
  return it->second;
}

template class ReferenceBasis<1>;
template class ReferenceBasis<2>;
template const ReferenceBasis<1>& reference_basis<1>(int);
template const ReferenceBasis<2>& reference_basis<2>(int);
template const Eigen::MatrixXd& pp_basis_table<1>(int);
template const Eigen::MatrixXd& pp_basis_table<2>(int);

}  // namespace dgremap

#include "dgremap/metric.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace dgremap {

namespace {

// unique vertices within `rings` rings of vertex v (v included)
template <int D>
std::vector<int> vertex_patch(const SimplicialMesh<D>& mesh, int v, int rings) {
  std::set<int> patch = {v};
  std::set<int> frontier = {v};
  for (int ring = 0; ring < rings; ++ring) {
    std::set<int> next;
    for (int p : frontier)
      for (int e : mesh.topology().vertex_elements[p])
        for (int w : mesh.element(e))
          if (patch.insert(w).second) next.insert(w);
    frontier = std::move(next);
    if (frontier.empty()) break;
  }
  return std::vector<int>(patch.begin(), patch.end());
}

constexpr int quad_terms(int d) { return d == 1 ? 3 : 6; }

// least-squares quadratic fit in coordinates centered at vertex v, scaled by
// the patch radius; returns false when rank deficient
template <int D>
bool fit_quadratic(const SimplicialMesh<D>& mesh, const Eigen::VectorXd& values, int v,
                   const std::vector<int>& patch, Eigen::Matrix<double, D, D>& hessian) {
  const int n_terms = quad_terms(D);
  const int n_pts = static_cast<int>(patch.size());
  if (n_pts < n_terms) return false;
  double radius = 0.0;
  for (int p : patch) radius = std::max(radius, (mesh.vertex(p) - mesh.vertex(v)).norm());
  if (!(radius > 0.0)) return false;
  Eigen::MatrixXd a(n_pts, n_terms);
  Eigen::VectorXd b(n_pts);
  for (int i = 0; i < n_pts; ++i) {
    const auto delta = (mesh.vertex(patch[i]) - mesh.vertex(v)) / radius;
    if constexpr (D == 1) {
      a(i, 0) = 1.0;
      a(i, 1) = delta(0);
      a(i, 2) = 0.5 * delta(0) * delta(0);
    } else {
      a(i, 0) = 1.0;
      a(i, 1) = delta(0);
      a(i, 2) = delta(1);
      a(i, 3) = 0.5 * delta(0) * delta(0);
      a(i, 4) = delta(0) * delta(1);
      a(i, 5) = 0.5 * delta(1) * delta(1);
    }
    b(i) = values(patch[i]);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-10);
  if (qr.rank() < n_terms) return false;
  const Eigen::VectorXd c = qr.solve(b);
  const double s = 1.0 / (radius * radius);
  if constexpr (D == 1) {
    hessian(0, 0) = c(2) * s;
  } else {
    hessian(0, 0) = c(3) * s;
    hessian(0, 1) = hessian(1, 0) = c(4) * s;
    hessian(1, 1) = c(5) * s;
  }
  return true;
}

}  // namespace

template <int D>
std::vector<Eigen::Matrix<double, D, D>> hessian_recovery(
    const SimplicialMesh<D>& mesh, const Eigen::VectorXd& nodal_values) {
  if (nodal_values.size() != mesh.n_vertices())
    throw ValidationError("hessian_recovery needs one value per vertex");
  const int n_v = mesh.n_vertices();
  std::vector<Eigen::Matrix<double, D, D>> vertex_hessian(n_v);
  for (int v = 0; v < n_v; ++v) {
    bool ok = false;
    for (int rings = 1; rings <= 4 && !ok; ++rings) {
      const auto patch = vertex_patch(mesh, v, rings);
      ok = fit_quadratic<D>(mesh, nodal_values, v, patch, vertex_hessian[v]);
    }
    if (!ok)
      throw SingularFit("quadratic fit is rank deficient at vertex " + std::to_string(v) +
                        " even after patch enlargement");
  }
  std::vector<Eigen::Matrix<double, D, D>> element_hessian(mesh.n_elements());
  for (int e = 0; e < mesh.n_elements(); ++e) {
    Eigen::Matrix<double, D, D> h = Eigen::Matrix<double, D, D>::Zero();
    for (int v : mesh.element(e)) h += vertex_hessian[v];
    element_hessian[e] = h / (D + 1);
  }
  return element_hessian;
}

template <int D>
Eigen::Matrix<double, D, D> metric_from_hessian(const Eigen::Matrix<double, D, D>& hessian) {
  using Mat = Eigen::Matrix<double, D, D>;
  Mat habs;
  if constexpr (D == 1) {
    habs(0, 0) = std::abs(hessian(0, 0));
  } else {
    const Mat sym = 0.5 * (hessian + hessian.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> eig(sym);
    habs = eig.eigenvectors() * eig.eigenvalues().cwiseAbs().asDiagonal() *
           eig.eigenvectors().transpose();
  }
  const Mat base = Mat::Identity() + habs;
  const double det = base.determinant();
  return std::pow(det, -1.0 / (D + 4)) * base;
}

template <int D>
MetricField<D> metric_from_nodal_values(const SimplicialMesh<D>& mesh,
                                        const Eigen::VectorXd& nodal_values) {
  const auto hessians = hessian_recovery<D>(mesh, nodal_values);
  MetricField<D> metric;
  metric.tensors.resize(hessians.size());
  for (std::size_t e = 0; e < hessians.size(); ++e)
    metric.tensors[e] = metric_from_hessian<D>(hessians[e]);
  return metric;
}

template <int D>
Eigen::Matrix<double, D, D> metric_pair_intersection(const Eigen::Matrix<double, D, D>& a,
                                                     const Eigen::Matrix<double, D, D>& b) {
  using Mat = Eigen::Matrix<double, D, D>;
  if constexpr (D == 1) {
    Mat m;
    m(0, 0) = std::max(a(0, 0), b(0, 0));
    return m;
  } else {
    Eigen::SelfAdjointEigenSolver<Mat> eig_a(a);
    const Mat a_half = eig_a.operatorSqrt();
    const Mat a_half_inv = eig_a.operatorInverseSqrt();
    const Mat n = a_half_inv * b * a_half_inv;
    Eigen::SelfAdjointEigenSolver<Mat> eig_n(0.5 * (n + n.transpose()));
    const Eigen::Matrix<double, D, 1> lam = eig_n.eigenvalues().cwiseMax(1.0);
    return a_half * eig_n.eigenvectors() * lam.asDiagonal() *
           eig_n.eigenvectors().transpose() * a_half;
  }
}

template <int D>
MetricField<D> metric_intersection(const std::vector<MetricField<D>>& fields) {
  if (fields.empty()) throw ValidationError("metric_intersection of an empty list");
  MetricField<D> out = fields[0];
  for (std::size_t k = 1; k < fields.size(); ++k) {
    if (fields[k].size() != out.size())
      throw ValidationError("metric fields live on different meshes");
    for (int e = 0; e < out.size(); ++e)
      out.tensors[e] = metric_pair_intersection<D>(out.tensors[e], fields[k].tensors[e]);
  }
  return out;
}

template <int D>
std::string metric_to_csv(const MetricField<D>& metric) {
  std::ostringstream os;
  os.precision(17);
  os << "element";
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) os << ",m" << i << j;
  os << "\n";
  for (int e = 0; e < metric.size(); ++e) {
    os << e;
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j) os << "," << metric.tensors[e](i, j);
    os << "\n";
  }
  return os.str();
}

template std::vector<Eigen::Matrix<double, 1, 1>> hessian_recovery<1>(
    const SimplicialMesh<1>&, const Eigen::VectorXd&);
template std::vector<Eigen::Matrix<double, 2, 2>> hessian_recovery<2>(
    const SimplicialMesh<2>&, const Eigen::VectorXd&);
template Eigen::Matrix<double, 1, 1> metric_from_hessian<1>(const Eigen::Matrix<double, 1, 1>&);
template Eigen::Matrix<double, 2, 2> metric_from_hessian<2>(const Eigen::Matrix<double, 2, 2>&);
template MetricField<1> metric_from_nodal_values<1>(const SimplicialMesh<1>&,
                                                    const Eigen::VectorXd&);
template MetricField<2> metric_from_nodal_values<2>(const SimplicialMesh<2>&,
                                                    const Eigen::VectorXd&);
template Eigen::Matrix<double, 1, 1> metric_pair_intersection<1>(
    const Eigen::Matrix<double, 1, 1>&, const Eigen::Matrix<double, 1, 1>&);
template Eigen::Matrix<double, 2, 2> metric_pair_intersection<2>(
    const Eigen::Matrix<double, 2, 2>&, const Eigen::Matrix<double, 2, 2>&);
template MetricField<1> metric_intersection<1>(const std::vector<MetricField<1>>&);
template MetricField<2> metric_intersection<2>(const std::vector<MetricField<2>>&);
template std::string metric_to_csv<1>(const MetricField<1>&);
template std::string metric_to_csv<2>(const MetricField<2>&);

}  // namespace dgremap

#include "dgremap/limiter.hpp"

#include <sstream>

namespace dgremap {

template <int D>
LimiterReport pp_limit_coeffs(typename DGField<D>::Coeffs& coeffs, int degree,
                              NegativeAveragePolicy policy) {
  LimiterReport report;
  const Eigen::MatrixXd& table = pp_basis_table<D>(degree);
  const double phi0 = ReferenceBasis<D>::phi0();
  const int n_b = static_cast<int>(coeffs.cols());
  const int n_pts = static_cast<int>(table.rows());
  for (int e = 0; e < coeffs.rows(); ++e) {
    const double avg = coeffs(e, 0) * phi0;
    if (avg < 0.0) {
      report.worst_average = std::min(report.worst_average, avg);
      if (policy == NegativeAveragePolicy::Error) {
        std::ostringstream os;
        os << "cell " << e << " has negative average " << avg
           << "; the positivity limiter requires nonnegative averages";
        throw NegativeCellAverage(os.str(), e, avg);
      }
      coeffs.row(e).setZero();
      ++report.negative_average_cells;
      ++report.limited_cells;
      continue;
    }
    double z = 0.0;
    for (int q = 0; q < n_pts; ++q) {
      double v = 0.0;
      for (int j = 0; j < n_b; ++j) v += table(q, j) * coeffs(e, j);
      z = std::min(z, v);
    }
    if (z == 0.0) continue;  // lambda = 1, nothing to do
    double lambda = (avg == 0.0) ? 0.0 : avg / (avg - z);
    lambda *= 1.0 - 1e-13;
    for (int j = 1; j < n_b; ++j) coeffs(e, j) *= lambda;
    ++report.limited_cells;
  }
  return report;
}

template <int D>
LimiterReport pp_limit(DGField<D>& field, NegativeAveragePolicy policy) {
  return pp_limit_coeffs<D>(field.coeffs(), field.degree(), policy);
}

template LimiterReport pp_limit_coeffs<1>(DGField<1>::Coeffs&, int, NegativeAveragePolicy);
template LimiterReport pp_limit_coeffs<2>(DGField<2>::Coeffs&, int, NegativeAveragePolicy);
template LimiterReport pp_limit<1>(DGField<1>&, NegativeAveragePolicy);
template LimiterReport pp_limit<2>(DGField<2>&, NegativeAveragePolicy);

}  // namespace dgremap

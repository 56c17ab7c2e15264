// Linear-scaling positivity limiter around nonnegative cell averages.
#pragma once

#include "dgremap/field.hpp"

namespace dgremap {

enum class NegativeAveragePolicy {
  // a negative cell average is a hard error (interpolation path)
  Error,
  // flatten the cell to zero and count the event (transport path, where 2D
  // average positivity is not guaranteed)
  FlattenAndCount,
};

struct LimiterReport {
  int limited_cells = 0;           // cells scaled with lambda < 1
  int negative_average_cells = 0;  // only with FlattenAndCount
  double worst_average = 0.0;      // most negative average seen
};

// Scales each cell's polynomial toward its average so every value on the
// limiter point set becomes nonnegative: u <- lambda (u - ubar) + ubar with
// lambda = ubar / (ubar - z), z = min(min_{G_K} u, 0).  Cell averages are
// unchanged.  lambda is shrunk by 1e-13 so the scaled minimum stays
// nonnegative after rounding; the limiter remains idempotent.
template <int D>
LimiterReport pp_limit_coeffs(typename DGField<D>::Coeffs& coeffs, int degree,
                              NegativeAveragePolicy policy);

template <int D>
LimiterReport pp_limit(DGField<D>& field,
                       NegativeAveragePolicy policy = NegativeAveragePolicy::Error);

extern template LimiterReport pp_limit_coeffs<1>(DGField<1>::Coeffs&, int,
                                                 NegativeAveragePolicy);
extern template LimiterReport pp_limit_coeffs<2>(DGField<2>::Coeffs&, int,
                                                 NegativeAveragePolicy);
extern template LimiterReport pp_limit<1>(DGField<1>&, NegativeAveragePolicy);
extern template LimiterReport pp_limit<2>(DGField<2>&, NegativeAveragePolicy);

}  // namespace dgremap

#pragma once

#include <span>
#include <vector>

namespace opecv {

// Per-sample contributions v_i; an estimator's value is their mean.
struct PerSampleValues {
  std::vector<double> values;
};

struct MeanVariance {
  double estimate = 0.0;
  // (1/n^2) * sum_i (v_i - mean)^2
  double variance_of_mean = 0.0;
};

MeanVariance mean_and_variance(std::span<const double> values);

inline MeanVariance mean_and_variance(const PerSampleValues& values) {
  return mean_and_variance(values.values);
}

// Empirical quantile with linear interpolation between order statistics
// (the usual "type 7" definition). `sorted` must be ascending and non-empty.
double interpolated_quantile(std::span<const double> sorted, double q);

}  // namespace opecv

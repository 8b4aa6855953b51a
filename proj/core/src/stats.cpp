#include "opecv/stats.hpp"

#include <cmath>

#include "opecv/error.hpp"

namespace opecv {

MeanVariance mean_and_variance(std::span<const double> values) {
  require(!values.empty(), "mean and variance of an empty vector");
  const auto n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / n;
  double spread = 0.0;
  for (double v : values) spread += (v - mean) * (v - mean);
  return {mean, spread / (n * n)};
}

double interpolated_quantile(std::span<const double> sorted, double q) {
  require(!sorted.empty(), "quantile of an empty sample");
  require(q >= 0.0 && q <= 1.0, "quantile level must lie in [0, 1]");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace opecv

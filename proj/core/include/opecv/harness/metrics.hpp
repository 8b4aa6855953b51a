#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "opecv/harness/experiment.hpp"
#include "opecv/random.hpp"

namespace opecv::harness {

inline constexpr std::size_t kDefaultBootstrapResamples = 10000;

// Percentile bootstrap interval for the mean.
std::pair<double, double> bootstrap_ci(std::span<const double> values, double level,
                                       std::size_t resamples, Rng& rng);

struct SummaryRow {
  std::string dataset;  // "ALL" pools every dataset
  std::string method;
  std::size_t sample_size = 0;
  std::size_t count = 0;
  double mse = 0.0;
  double mse_lo = 0.0;
  double mse_hi = 0.0;
  // NaN when the method has no regret.
  double regret = 0.0;
  double regret_lo = 0.0;
  double regret_hi = 0.0;
  double median_regret = 0.0;
};

inline constexpr const char* kPooledDataset = "ALL";

// Per (dataset, sample_size, method) plus pooled-over-datasets rows, sorted
// by (dataset, sample_size, method). Bootstrap streams derive from `seed`.
std::vector<SummaryRow> aggregate(std::span<const ResultRow> rows, std::uint64_t seed,
                                  std::size_t resamples = kDefaultBootstrapResamples,
                                  double level = 0.95);

double median(std::vector<double> values);

}  // namespace opecv::harness

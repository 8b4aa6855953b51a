#include "opecv/harness/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

#include "opecv/error.hpp"
#include "opecv/stats.hpp"

namespace opecv::harness {

std::pair<double, double> bootstrap_ci(std::span<const double> values, double level,
                                       std::size_t resamples, Rng& rng) {
  require(!values.empty(), "bootstrap needs at least one value");
  require(level > 0.0 && level < 1.0, "confidence level must lie in (0, 1)");
  require(resamples >= 1, "bootstrap needs at least one resample");
  const std::size_t n = values.size();
  std::vector<double> means(resamples);
  for (auto& mean : means) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += values[uniform_index(rng, n)];
    mean = total / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  const double tail = (1.0 - level) / 2.0;
  return {interpolated_quantile(means, tail), interpolated_quantile(means, 1.0 - tail)};
}

double median(std::vector<double> values) {
  require(!values.empty(), "median of an empty sample");
  std::sort(values.begin(), values.end());
  return interpolated_quantile(values, 0.5);
}

namespace {

double mean_of(const std::vector<double>& v) {
  double total = 0.0;
  for (double x : v) total += x;
  return total / static_cast<double>(v.size());
}

struct Group {
  std::vector<double> errors;
  std::vector<double> regrets;  // finite regrets only
};

}  // namespace

std::vector<SummaryRow> aggregate(std::span<const ResultRow> rows, std::uint64_t seed,
                                  std::size_t resamples, double level) {
  using Key = std::tuple<std::string, std::size_t, std::string>;
  std::map<Key, Group> groups;
  std::map<std::string, bool> datasets;
  for (const auto& row : rows) {
    datasets[row.dataset] = true;
    for (const std::string& ds : {row.dataset, std::string(kPooledDataset)}) {
      auto& g = groups[Key{ds, row.sample_size, row.method}];
      g.errors.push_back(row.squared_error);
      if (std::isfinite(row.regret)) g.regrets.push_back(row.regret);
    }
  }
  // With one dataset the pooled rows repeat it; drop them.
  if (datasets.size() == 1) {
    std::erase_if(groups, [](const auto& kv) { return std::get<0>(kv.first) == kPooledDataset; });
  }

  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  std::vector<SummaryRow> out;
  for (const auto& [key, g] : groups) {
    const auto& [ds, size, method] = key;
    SummaryRow s;
    s.dataset = ds;
    s.sample_size = size;
    s.method = method;
    s.count = g.errors.size();
    auto rng = make_rng({seed, hash_name(ds), size, hash_name(method)});
    s.mse = mean_of(g.errors);
    std::tie(s.mse_lo, s.mse_hi) = bootstrap_ci(g.errors, level, resamples, rng);
    if (g.regrets.empty()) {
      s.regret = s.regret_lo = s.regret_hi = s.median_regret = kNaN;
    } else {
      s.regret = mean_of(g.regrets);
      std::tie(s.regret_lo, s.regret_hi) = bootstrap_ci(g.regrets, level, resamples, rng);
      s.median_regret = median(g.regrets);
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace opecv::harness

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "opecv/random.hpp"

namespace opecv {

// One logged interaction. The logging propensity is the probability the
// logging policy assigned to `action` at logging time.
struct LoggedSample {
  std::vector<double> context;
  int action = 0;
  double reward = 0.0;
  double logging_propensity = 1.0;
};

// Immutable logged bandit data stored column-wise. Contexts are a row-major
// n x d block. Construction validates every sample: contexts have length d,
// actions lie in [0, m), rewards in [0, 1], propensities in (0, 1].
class LoggedDataset {
 public:
  LoggedDataset() = default;
  LoggedDataset(std::size_t d, std::size_t m, std::span<const LoggedSample> samples);
  LoggedDataset(std::size_t d, std::size_t m, std::vector<double> contexts,
                std::vector<int> actions, std::vector<double> rewards,
                std::vector<double> logging_propensities);

  std::size_t n() const { return actions_.size(); }
  std::size_t d() const { return d_; }
  std::size_t m() const { return m_; }
  bool empty() const { return actions_.empty(); }

  std::span<const double> context(std::size_t i) const {
    return {contexts_.data() + i * d_, d_};
  }
  int action(std::size_t i) const { return actions_[i]; }
  double reward(std::size_t i) const { return rewards_[i]; }
  double logging_propensity(std::size_t i) const { return propensities_[i]; }
  LoggedSample sample(std::size_t i) const;

  const std::vector<double>& contexts() const { return contexts_; }
  const std::vector<int>& actions() const { return actions_; }
  const std::vector<double>& rewards() const { return rewards_; }
  const std::vector<double>& logging_propensities() const { return propensities_; }

  // Rows in the given order; indices must be < n().
  LoggedDataset subset(std::span<const std::size_t> indices) const;

  double mean_reward() const;

 private:
  void validate() const;

  std::size_t d_ = 0;
  std::size_t m_ = 0;
  std::vector<double> contexts_;
  std::vector<int> actions_;
  std::vector<double> rewards_;
  std::vector<double> propensities_;
};

struct SplitPair {
  LoggedDataset train;
  LoggedDataset validation;
  // Ascending row indices into the parent dataset.
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> validation_indices;
};

// Training-set size for a Monte Carlo split: round-half-up of fraction * n,
// clamped to [1, n - 1]. Requires n >= 2.
std::size_t train_size(std::size_t n, double train_fraction);

// Uniformly random partition without replacement into a training part of
// train_size(n, train_fraction) rows and a validation part with the rest.
SplitPair mc_split(const LoggedDataset& dataset, double train_fraction, Rng& rng);

// First `count` entries of a uniformly random permutation of [0, n).
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count, Rng& rng);

}  // namespace opecv

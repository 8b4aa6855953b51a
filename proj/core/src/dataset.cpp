#include "opecv/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "opecv/error.hpp"

namespace opecv {

LoggedDataset::LoggedDataset(std::size_t d, std::size_t m, std::span<const LoggedSample> samples)
    : d_(d), m_(m) {
  contexts_.reserve(samples.size() * d);
  actions_.reserve(samples.size());
  rewards_.reserve(samples.size());
  propensities_.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    require(s.context.size() == d, "sample " + std::to_string(i) + ": context length " +
                                       std::to_string(s.context.size()) + " != d = " +
                                       std::to_string(d));
    contexts_.insert(contexts_.end(), s.context.begin(), s.context.end());
    actions_.push_back(s.action);
    rewards_.push_back(s.reward);
    propensities_.push_back(s.logging_propensity);
  }
  validate();
}

LoggedDataset::LoggedDataset(std::size_t d, std::size_t m, std::vector<double> contexts,
                             std::vector<int> actions, std::vector<double> rewards,
                             std::vector<double> logging_propensities)
    : d_(d),
      m_(m),
      contexts_(std::move(contexts)),
      actions_(std::move(actions)),
      rewards_(std::move(rewards)),
      propensities_(std::move(logging_propensities)) {
  require(rewards_.size() == actions_.size() && propensities_.size() == actions_.size(),
          "actions, rewards and propensities must have equal length");
  require(contexts_.size() == actions_.size() * d_, "context block must be n x d");
  validate();
}

void LoggedDataset::validate() const {
  require(m_ >= 1, "action count m must be positive");
  for (std::size_t i = 0; i < actions_.size(); ++i) {
    const std::string where = "sample " + std::to_string(i) + ": ";
    require(actions_[i] >= 0 && static_cast<std::size_t>(actions_[i]) < m_,
            where + "action out of range [0, m)");
    require(rewards_[i] >= 0.0 && rewards_[i] <= 1.0, where + "reward outside [0, 1]");
    require(propensities_[i] > 0.0 && propensities_[i] <= 1.0,
            where + "logging propensity outside (0, 1]");
  }
  for (double x : contexts_) require(std::isfinite(x), "non-finite context value");
}

LoggedSample LoggedDataset::sample(std::size_t i) const {
  auto x = context(i);
  return {std::vector<double>(x.begin(), x.end()), actions_[i], rewards_[i], propensities_[i]};
}

LoggedDataset LoggedDataset::subset(std::span<const std::size_t> indices) const {
  LoggedDataset out;
  out.d_ = d_;
  out.m_ = m_;
  out.contexts_.reserve(indices.size() * d_);
  out.actions_.reserve(indices.size());
  out.rewards_.reserve(indices.size());
  out.propensities_.reserve(indices.size());
  for (std::size_t idx : indices) {
    require(idx < n(), "subset index out of range");
    auto x = context(idx);
    out.contexts_.insert(out.contexts_.end(), x.begin(), x.end());
    out.actions_.push_back(actions_[idx]);
    out.rewards_.push_back(rewards_[idx]);
    out.propensities_.push_back(propensities_[idx]);
  }
  return out;
}

double LoggedDataset::mean_reward() const {
  require(!empty(), "mean reward of an empty dataset");
  return std::accumulate(rewards_.begin(), rewards_.end(), 0.0) / static_cast<double>(n());
}

std::size_t train_size(std::size_t n, double train_fraction) {
  require(n >= 2, "a split needs at least two samples");
  require(train_fraction > 0.0 && train_fraction < 1.0, "train fraction must lie in (0, 1)");
  const double raw = std::floor(train_fraction * static_cast<double>(n) + 0.5);
  const auto rounded = static_cast<std::size_t>(raw);
  return std::clamp<std::size_t>(rounded, 1, n - 1);
}

std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count, Rng& rng) {
  require(count <= n, "cannot draw more items than the population holds");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(uniform_index(rng, n - i));
    std::swap(perm[i], perm[j]);
  }
  perm.resize(count);
  return perm;
}

SplitPair mc_split(const LoggedDataset& dataset, double train_fraction, Rng& rng) {
  const std::size_t n = dataset.n();
  const std::size_t n_train = train_size(n, train_fraction);

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = 0; i < n_train; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(uniform_index(rng, n - i));
    std::swap(perm[i], perm[j]);
  }

  SplitPair split;
  split.train_indices.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.validation_indices.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  std::sort(split.train_indices.begin(), split.train_indices.end());
  std::sort(split.validation_indices.begin(), split.validation_indices.end());
  split.train = dataset.subset(split.train_indices);
  split.validation = dataset.subset(split.validation_indices);
  return split;
}

}  // namespace opecv

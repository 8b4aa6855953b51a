#include "opecv/policy.hpp"

#include <algorithm>
#include <cmath>

#include "opecv/error.hpp"

namespace opecv {

SoftmaxLinearPolicy::SoftmaxLinearPolicy(std::vector<std::vector<double>> weights,
                                         double inverse_temperature)
    : m_(weights.size()), beta_(inverse_temperature) {
  require(m_ >= 1, "a policy needs at least one action");
  require(std::isfinite(inverse_temperature), "inverse temperature must be finite");
  d_ = weights.front().size();
  weights_.reserve(m_ * d_);
  for (const auto& w : weights) {
    require(w.size() == d_, "all action weight vectors must have the same length");
    for (double v : w) require(std::isfinite(v), "policy weights must be finite");
    weights_.insert(weights_.end(), w.begin(), w.end());
  }
}

SoftmaxLinearPolicy SoftmaxLinearPolicy::uniform(std::size_t m, std::size_t d) {
  return SoftmaxLinearPolicy(std::vector<std::vector<double>>(m, std::vector<double>(d, 0.0)), 0.0);
}

void softmax(std::span<const double> logits, std::span<double> out) {
  require(out.size() == logits.size() && !logits.empty(), "softmax size mismatch");
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t a = 0; a < logits.size(); ++a) {
    out[a] = std::exp(logits[a] - top);
    total += out[a];
  }
  for (double& p : out) p /= total;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  softmax(logits, out);
  return out;
}

void SoftmaxLinearPolicy::action_probs(std::span<const double> context,
                                       std::span<double> out) const {
  require(context.size() == d_, "context length does not match policy dimension");
  require(out.size() == m_, "output buffer must have one entry per action");
  if (beta_ == 0.0) {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(m_));
    return;
  }
  for (std::size_t a = 0; a < m_; ++a) {
    const double* w = weights_.data() + a * d_;
    double score = 0.0;
    for (std::size_t j = 0; j < d_; ++j) score += w[j] * context[j];
    out[a] = beta_ * score;
  }
  softmax(out, out);
}

std::vector<double> SoftmaxLinearPolicy::action_probs(std::span<const double> context) const {
  std::vector<double> out(m_);
  action_probs(context, out);
  return out;
}

std::vector<double> action_probs(const SoftmaxLinearPolicy& policy, std::span<const double> context) {
  return policy.action_probs(context);
}

double propensity_weight(const SoftmaxLinearPolicy& target, const LoggedSample& sample) {
  require(sample.logging_propensity > 0.0, "logging propensity must be positive");
  require(sample.action >= 0 && static_cast<std::size_t>(sample.action) < target.m(),
          "action out of range for target policy");
  const auto probs = target.action_probs(sample.context);
  return probs[static_cast<std::size_t>(sample.action)] / sample.logging_propensity;
}

std::vector<double> propensity_weights(const SoftmaxLinearPolicy& target,
                                       const LoggedDataset& dataset) {
  require(target.m() == dataset.m(), "policy and dataset disagree on the action count");
  std::vector<double> probs(target.m());
  std::vector<double> weights(dataset.n());
  for (std::size_t i = 0; i < dataset.n(); ++i) {
    target.action_probs(dataset.context(i), probs);
    weights[i] = probs[static_cast<std::size_t>(dataset.action(i))] / dataset.logging_propensity(i);
  }
  return weights;
}

std::vector<double> policy_table(const SoftmaxLinearPolicy& policy, const LoggedDataset& dataset) {
  require(policy.m() == dataset.m(), "policy and dataset disagree on the action count");
  const std::size_t m = policy.m();
  std::vector<double> table(dataset.n() * m);
  for (std::size_t i = 0; i < dataset.n(); ++i) {
    policy.action_probs(dataset.context(i), std::span<double>(table.data() + i * m, m));
  }
  return table;
}

}  // namespace opecv

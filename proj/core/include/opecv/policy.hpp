#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "opecv/dataset.hpp"

namespace opecv {

// pi(a | x) proportional to exp(beta * x^T theta_a). One weight vector per
// action; beta = 0 gives the uniform policy, negative beta prefers actions
// with low scores.
class SoftmaxLinearPolicy {
 public:
  SoftmaxLinearPolicy() = default;
  SoftmaxLinearPolicy(std::vector<std::vector<double>> weights, double inverse_temperature);

  static SoftmaxLinearPolicy uniform(std::size_t m, std::size_t d);

  std::size_t m() const { return m_; }
  std::size_t d() const { return d_; }
  double inverse_temperature() const { return beta_; }
  std::span<const double> action_weights(std::size_t a) const {
    return {weights_.data() + a * d_, d_};
  }

  // Writes the m action probabilities for `context` into `out`.
  void action_probs(std::span<const double> context, std::span<double> out) const;
  std::vector<double> action_probs(std::span<const double> context) const;

 private:
  std::size_t m_ = 0;
  std::size_t d_ = 0;
  double beta_ = 0.0;
  std::vector<double> weights_;  // m x d, row-major
};

// Max-shifted softmax of arbitrary logits.
void softmax(std::span<const double> logits, std::span<double> out);
std::vector<double> softmax(std::span<const double> logits);

std::vector<double> action_probs(const SoftmaxLinearPolicy& policy, std::span<const double> context);

// pi(a|x) / pi_0(a|x) with the stored logging propensity as the denominator.
double propensity_weight(const SoftmaxLinearPolicy& target, const LoggedSample& sample);

// Per-row propensity weights w_i for a whole dataset.
std::vector<double> propensity_weights(const SoftmaxLinearPolicy& target,
                                       const LoggedDataset& dataset);

// Action probabilities for every row, as an n x m row-major block.
std::vector<double> policy_table(const SoftmaxLinearPolicy& policy, const LoggedDataset& dataset);

}  // namespace opecv

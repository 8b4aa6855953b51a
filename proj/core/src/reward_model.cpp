#include "opecv/reward_model.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "opecv/error.hpp"

namespace opecv {

RewardModel::RewardModel(std::size_t d, std::size_t m, std::vector<double> coefficients,
                         std::vector<bool> fitted, double fallback, double regularization)
    : d_(d),
      m_(m),
      coefficients_(std::move(coefficients)),
      fitted_(std::move(fitted)),
      fallback_(fallback),
      regularization_(regularization) {
  require(m_ >= 1, "reward model needs at least one action");
  require(coefficients_.size() == m_ * (d_ + 1), "coefficient block must be m x (d + 1)");
  require(fitted_.size() == m_, "fitted flags must have one entry per action");
  for (double c : coefficients_) require(std::isfinite(c), "reward model coefficients must be finite");
}

RewardModel RewardModel::from_coefficients(std::size_t d, std::size_t m,
                                           std::vector<double> coefficients) {
  return RewardModel(d, m, std::move(coefficients), std::vector<bool>(m, true), 0.0, 0.0);
}

RewardModel RewardModel::zero(std::size_t d, std::size_t m) {
  return from_coefficients(d, m, std::vector<double>(m * (d + 1), 0.0));
}

double RewardModel::predict_raw(std::span<const double> context, std::size_t action) const {
  require(context.size() == d_, "context length does not match reward model dimension");
  require(action < m_, "action out of range for reward model");
  if (!fitted_[action]) return fallback_;
  const double* theta = coefficients_.data() + action * (d_ + 1);
  double value = theta[d_];
  for (std::size_t j = 0; j < d_; ++j) value += theta[j] * context[j];
  return value;
}

double RewardModel::predict(std::span<const double> context, std::size_t action) const {
  return std::clamp(predict_raw(context, action), 0.0, 1.0);
}

void RewardModel::predict_all(std::span<const double> context, std::span<double> out) const {
  require(out.size() == m_, "output buffer must have one entry per action");
  for (std::size_t a = 0; a < m_; ++a) out[a] = predict(context, a);
}

RewardModel fit_ridge(const LoggedDataset& dataset, const RidgeOptions& options) {
  require(options.regularization > 0.0, "ridge regularization must be positive");
  const std::size_t d = dataset.d();
  const std::size_t m = dataset.m();
  const std::size_t p = d + 1;
  const auto dim = static_cast<Eigen::Index>(p);

  std::vector<Eigen::MatrixXd> gram(m, Eigen::MatrixXd::Zero(dim, dim));
  std::vector<Eigen::VectorXd> moment(m, Eigen::VectorXd::Zero(dim));
  std::vector<std::size_t> counts(m, 0);

  Eigen::VectorXd z(dim);
  for (std::size_t i = 0; i < dataset.n(); ++i) {
    const auto x = dataset.context(i);
    for (std::size_t j = 0; j < d; ++j) z(static_cast<Eigen::Index>(j)) = x[j];
    z(dim - 1) = options.fit_intercept ? 1.0 : 0.0;
    const auto a = static_cast<std::size_t>(dataset.action(i));
    gram[a].selfadjointView<Eigen::Lower>().rankUpdate(z);
    moment[a] += dataset.reward(i) * z;
    ++counts[a];
  }

  std::vector<double> coefficients(m * p, 0.0);
  std::vector<bool> fitted(m, false);
  for (std::size_t a = 0; a < m; ++a) {
    if (counts[a] == 0) continue;
    Eigen::MatrixXd system = gram[a].selfadjointView<Eigen::Lower>();
    system.diagonal().array() += options.regularization;
    const Eigen::VectorXd theta = system.ldlt().solve(moment[a]);
    for (std::size_t j = 0; j < p; ++j) coefficients[a * p + j] = theta(static_cast<Eigen::Index>(j));
    if (!options.fit_intercept) coefficients[a * p + d] = 0.0;
    fitted[a] = true;
  }
  const double fallback = dataset.empty() ? 0.0 : dataset.mean_reward();
  return RewardModel(d, m, std::move(coefficients), std::move(fitted), fallback,
                     options.regularization);
}

RewardModel fit_ridge(const LoggedDataset& dataset, double regularization) {
  return fit_ridge(dataset, RidgeOptions{regularization, true});
}

double predict(const RewardModel& model, std::span<const double> context, int action) {
  require(action >= 0, "negative action");
  return model.predict(context, static_cast<std::size_t>(action));
}

double expected_reward(const RewardModel& model, const SoftmaxLinearPolicy& policy,
                       std::span<const double> context) {
  require(model.m() == policy.m(), "reward model and policy disagree on the action count");
  const auto probs = policy.action_probs(context);
  double total = 0.0;
  for (std::size_t a = 0; a < probs.size(); ++a) total += probs[a] * model.predict(context, a);
  return total;
}

}  // namespace opecv

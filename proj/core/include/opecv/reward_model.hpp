#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "opecv/dataset.hpp"
#include "opecv/policy.hpp"

namespace opecv {

inline constexpr double kDefaultRidge = 1e-3;

// Per-action affine reward regression f(x, a) = theta_a^T [x, 1].
// Actions that had no training rows predict `fallback` (the training mean
// reward). Predictions are clamped to [0, 1].
class RewardModel {
 public:
  RewardModel() = default;
  RewardModel(std::size_t d, std::size_t m, std::vector<double> coefficients,
              std::vector<bool> fitted, double fallback, double regularization);

  // A model with the given coefficients for every action; each row holds d
  // weights followed by the intercept.
  static RewardModel from_coefficients(std::size_t d, std::size_t m, std::vector<double> coefficients);
  static RewardModel zero(std::size_t d, std::size_t m);

  std::size_t d() const { return d_; }
  std::size_t m() const { return m_; }
  double regularization() const { return regularization_; }
  double fallback() const { return fallback_; }
  bool fitted(std::size_t a) const { return fitted_[a]; }
  std::span<const double> coefficients(std::size_t a) const {
    return {coefficients_.data() + a * (d_ + 1), d_ + 1};
  }

  // Affine value before clamping (fallback for unfitted actions).
  double predict_raw(std::span<const double> context, std::size_t action) const;
  double predict(std::span<const double> context, std::size_t action) const;
  // Clamped predictions for every action.
  void predict_all(std::span<const double> context, std::span<double> out) const;

 private:
  std::size_t d_ = 0;
  std::size_t m_ = 0;
  std::vector<double> coefficients_;  // m x (d + 1)
  std::vector<bool> fitted_;
  double fallback_ = 0.0;
  double regularization_ = kDefaultRidge;
};

struct RidgeOptions {
  double regularization = kDefaultRidge;
  // With the intercept column off, the intercept coefficient stays 0.
  bool fit_intercept = true;
};

// Solves (Z^T Z + lambda I) theta_a = Z^T r separately for each action over
// the rows that took it, Z = [x, 1]. The intercept is penalized like every
// other coefficient.
RewardModel fit_ridge(const LoggedDataset& dataset, const RidgeOptions& options = {});
RewardModel fit_ridge(const LoggedDataset& dataset, double regularization);

double predict(const RewardModel& model, std::span<const double> context, int action);

// sum_a pi(a|x) f(x, a)
double expected_reward(const RewardModel& model, const SoftmaxLinearPolicy& policy,
                       std::span<const double> context);

}  // namespace opecv

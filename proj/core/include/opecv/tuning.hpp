#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "opecv/dataset.hpp"
#include "opecv/estimators.hpp"
#include "opecv/policy.hpp"
#include "opecv/reward_model.hpp"

namespace opecv {

// Direction in which the estimator's variance grows along an ascending grid.
enum class VarianceOrder {
  IncreasingWithValue,  // larger M / tau / lambda / cluster count -> more variance
  DecreasingWithValue,  // IPS-lambda: larger lambda -> less variance
};

struct HyperGrid {
  EstimatorKind kind = EstimatorKind::TruncatedIPS;
  std::vector<double> values;  // strictly ascending
  VarianceOrder variance_order = VarianceOrder::IncreasingWithValue;

  // Values ordered from the highest-variance setting to the lowest, the
  // order a Lepski-style walk consumes them in.
  std::vector<double> by_decreasing_variance() const;
};

// values[j] = lo * (hi / lo)^(j / (count - 1)), endpoints exact.
std::vector<double> geometric_grid(double lo, double hi, std::size_t count);
std::vector<double> linear_grid(double lo, double hi, std::size_t count);

double sigmoid(double h);

// Nearest-rank empirical quantile: the ceil(q * n)-th smallest value (the
// minimum for q = 0).
double nearest_rank_quantile(std::vector<double> values, double q);

// Nearest-rank quantile of the propensity weights w(x_i, a_i).
double weight_quantile(const LoggedDataset& dataset, const SoftmaxLinearPolicy& target, double q);

inline constexpr std::size_t kDefaultGridSize = 30;
// Lower bound for quantile-based grid endpoints; geometric grids need lo > 0.
inline constexpr double kMinGridValue = 1e-8;

// Default hyper-parameter grid for a tunable kind on this data and target.
HyperGrid default_grid(EstimatorKind kind, const LoggedDataset& dataset,
                       const SoftmaxLinearPolicy& target);

// sqrt(n)
double theory_truncation(std::size_t n);

struct TunerObjective {
  double variance = 0.0;
  double bias = 0.0;
  double value() const { return variance + bias * bias; }
};

// Var(SwitchDR(tau)) + Bias_tau^2 with the pessimistic bias
// (1/n) sum_i sum_a pi(a|x_i) R_max 1{w(x_i, a) > tau}, R_max = 1.
// The bias looks at every action, so the logging policy is needed.
TunerObjective switch_dr_objective(const LoggedDataset& dataset, const SoftmaxLinearPolicy& target,
                                   const SoftmaxLinearPolicy& logging, const RewardModel& model,
                                   double tau);

// Grid argmin of switch_dr_objective; ties go to the smaller tau.
double tune_switch_dr(const LoggedDataset& dataset, const SoftmaxLinearPolicy& target,
                      const SoftmaxLinearPolicy& logging, const RewardModel& model,
                      std::span<const double> grid);

// Var(DRs(lambda)) + [(1/n) sum_i (w_hat_i - w_i)(r_i - f(x_i, a_i))]^2
TunerObjective dr_shrink_objective(const LoggedDataset& dataset, const SoftmaxLinearPolicy& target,
                                   const RewardModel& model, double lambda, ShrinkMode mode);

// Grid argmin of dr_shrink_objective; ties go to the smaller lambda.
double tune_dr_shrink(const LoggedDataset& dataset, const SoftmaxLinearPolicy& target,
                      const RewardModel& model, std::span<const double> grid, ShrinkMode mode);

inline constexpr double kDefaultIpsLambdaDelta = 0.05;

// ((1 - lambda) w^s + lambda)^(1/s), evaluated in log space.
double power_mean_weight(double weight, double lambda, double s);

// g(lambda) = lambda^2 (1/n) sum_i w_{lambda,s}(x_i, a_i)^2 - 2 log(1/delta) / (3n),
// s = n^(1/4).
double ips_lambda_equation(std::span<const double> weights, double lambda, double delta);

// Root of ips_lambda_equation in [0, 1] by bisection to 1e-10. Returns 0 if
// g(0) >= 0 and 1 if g(1) < 0. delta must lie in (0, 1].
double tune_ips_lambda(const LoggedDataset& dataset, const SoftmaxLinearPolicy& target,
                       double delta = kDefaultIpsLambdaDelta);
double tune_ips_lambda(std::span<const double> weights, double delta = kDefaultIpsLambdaDelta);

std::vector<EstimatorSpec> candidates_from_grid(EstimatorKind kind, std::span<const double> grid);
std::vector<EstimatorSpec> candidates_from_grid(const HyperGrid& grid);

}  // namespace opecv

#include "opecv/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "opecv/error.hpp"
#include "opecv/stats.hpp"

namespace opecv {

namespace {

// Everything the SwitchDR and DR-shrinkage objectives need, computed once
// per dataset so a grid sweep costs O(n) per grid point.
struct TunerTerms {
  std::size_t m = 0;
  std::vector<double> weights;    // w_i
  std::vector<double> residuals;  // r_i - f(x_i, a_i)
  std::vector<double> dm;         // sum_a pi(a|x_i) f(x_i, a)
  // n x m blocks, filled only when a logging policy is available.
  std::vector<double> target_probs;
  std::vector<double> all_weights;  // w(x_i, a)
};

TunerTerms tuner_terms(const LoggedDataset& dataset, const SoftmaxLinearPolicy& target,
                       const RewardModel& model, const SoftmaxLinearPolicy* logging) {
  require(target.m() == dataset.m() && model.m() == dataset.m(),
          "policy, reward model and dataset disagree on the action count");
  require(!dataset.empty(), "tuning needs a non-empty dataset");
  const std::size_t n = dataset.n();
  const std::size_t m = dataset.m();
  TunerTerms t;
  t.m = m;
  t.weights.resize(n);
  t.residuals.resize(n);
  t.dm.resize(n);
  if (logging != nullptr) {
    require(logging->m() == m, "logging policy and dataset disagree on the action count");
    t.target_probs.resize(n * m);
    t.all_weights.resize(n * m);
  }
  std::vector<double> probs(m);
  std::vector<double> logging_probs(m);
  std::vector<double> predictions(m);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = dataset.context(i);
    const auto a = static_cast<std::size_t>(dataset.action(i));
    target.action_probs(x, probs);
    model.predict_all(x, predictions);
    double dm = 0.0;
    for (std::size_t b = 0; b < m; ++b) dm += probs[b] * predictions[b];
    t.weights[i] = probs[a] / dataset.logging_propensity(i);
    t.residuals[i] = dataset.reward(i) - predictions[a];
    t.dm[i] = dm;
    if (logging != nullptr) {
      logging->action_probs(x, logging_probs);
      for (std::size_t b = 0; b < m; ++b) {
        t.target_probs[i * m + b] = probs[b];
        t.all_weights[i * m + b] = probs[b] / logging_probs[b];
      }
    }
  }
  return t;
}

TunerObjective switch_objective(const TunerTerms& t, double tau, std::vector<double>& scratch) {
  constexpr double kMaxReward = 1.0;
  const std::size_t n = t.weights.size();
  scratch.resize(n);
  double bias = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    scratch[i] = t.dm[i] + (t.weights[i] <= tau ? t.weights[i] * t.residuals[i] : 0.0);
    double dropped = 0.0;
    for (std::size_t b = 0; b < t.m; ++b) {
      if (t.all_weights[i * t.m + b] > tau) dropped += t.target_probs[i * t.m + b] * kMaxReward;
    }
    bias += dropped;
  }
  bias /= static_cast<double>(n);
  return {mean_and_variance(scratch).variance_of_mean, bias};
}

TunerObjective shrink_objective(const TunerTerms& t, double lambda, ShrinkMode mode,
                                std::vector<double>& scratch) {
  const std::size_t n = t.weights.size();
  scratch.resize(n);
  double bias = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double shrunk = shrink_weight(t.weights[i], lambda, mode);
    scratch[i] = t.dm[i] + shrunk * t.residuals[i];
    bias += (shrunk - t.weights[i]) * t.residuals[i];
  }
  bias /= static_cast<double>(n);
  return {mean_and_variance(scratch).variance_of_mean, bias};
}

// Grid argmin with ties resolved toward the smallest grid value.
template <typename Objective>
double grid_argmin(std::span<const double> grid, Objective&& objective) {
  require(!grid.empty(), "tuning grid is empty");
  double best_value = 0.0;
  double best_objective = std::numeric_limits<double>::infinity();
  bool have_best = false;
  for (double value : grid) {
    const double obj = objective(value);
    if (!have_best || obj < best_objective || (obj == best_objective && value < best_value)) {
      best_value = value;
      best_objective = obj;
      have_best = true;
    }
  }
  return best_value;
}

void require_strictly_ascending(std::span<const double> values) {
  for (std::size_t j = 1; j < values.size(); ++j) {
    require(values[j] > values[j - 1], "grid values must be strictly ascending");
  }
}

}  // namespace

std::vector<double> HyperGrid::by_decreasing_variance() const {
  std::vector<double> out = values;
  if (variance_order == VarianceOrder::IncreasingWithValue) std::reverse(out.begin(), out.end());
  return out;
}

std::vector<double> geometric_grid(double lo, double hi, std::size_t count) {
  require(lo > 0.0 && std::isfinite(lo), "geometric grid needs a positive finite lower end");
  require(hi > lo && std::isfinite(hi), "geometric grid needs hi > lo");
  require(count >= 2, "geometric grid needs at least two points");
  std::vector<double> out(count);
  const double log_ratio = std::log(hi / lo);
  for (std::size_t j = 0; j < count; ++j) {
    out[j] = lo * std::exp(log_ratio * static_cast<double>(j) / static_cast<double>(count - 1));
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

std::vector<double> linear_grid(double lo, double hi, std::size_t count) {
  require(hi > lo, "linear grid needs hi > lo");
  require(count >= 2, "linear grid needs at least two points");
  std::vector<double> out(count);
  for (std::size_t j = 0; j < count; ++j) {
    out[j] = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(count - 1);
  }
  out.back() = hi;
  return out;
}

double sigmoid(double h) { return 1.0 / (1.0 + std::exp(-h)); }

double nearest_rank_quantile(std::vector<double> values, double q) {
  require(!values.empty(), "quantile of an empty sample");
  require(q >= 0.0 && q <= 1.0, "quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
  return values[std::max<std::size_t>(rank, 1) - 1];
}

double weight_quantile(const LoggedDataset& dataset, const SoftmaxLinearPolicy& target, double q) {
  return nearest_rank_quantile(propensity_weights(target, dataset), q);
}

double theory_truncation(std::size_t n) { return std::sqrt(static_cast<double>(n)); }

HyperGrid default_grid(EstimatorKind kind, const LoggedDataset& dataset,
                       const SoftmaxLinearPolicy& target) {
  require(is_tunable(kind), std::string(to_string(kind)) + " has no hyper-parameter grid");
  HyperGrid grid;
  grid.kind = kind;

  if (kind == EstimatorKind::IPSLambda) {
    for (double h : linear_grid(-10.0, 10.0, kDefaultGridSize)) grid.values.push_back(sigmoid(h));
    grid.variance_order = VarianceOrder::DecreasingWithValue;
    return grid;
  }
  if (kind == EstimatorKind::GroupIPS) {
    grid.values = {2.0, 4.0, 8.0, 16.0, 32.0};
    return grid;
  }

  require(!dataset.empty(), "quantile-based grids need a non-empty dataset");
  const auto weights = propensity_weights(target, dataset);
  double lo = std::max(nearest_rank_quantile(weights, 0.05), kMinGridValue);
  double hi = nearest_rank_quantile(weights, 0.95);
  // Collapsed weight range (e.g. target == logging): widen to [lo, 2 lo].
  if (!(hi > lo)) hi = 2.0 * lo;

  if (kind == EstimatorKind::DRos) {
    grid.values = geometric_grid(0.01 * lo * lo, 100.0 * hi * hi, kDefaultGridSize);
    return grid;
  }
  grid.values = geometric_grid(lo, hi, kDefaultGridSize);
  if (kind == EstimatorKind::TruncatedIPS) {
    const double theory = theory_truncation(dataset.n());
    if (std::find(grid.values.begin(), grid.values.end(), theory) == grid.values.end()) {
      grid.values.insert(std::upper_bound(grid.values.begin(), grid.values.end(), theory), theory);
    }
  }
  return grid;
}

TunerObjective switch_dr_objective(const LoggedDataset& dataset, const SoftmaxLinearPolicy& target,
                                   const SoftmaxLinearPolicy& logging, const RewardModel& model,
                                   double tau) {
  require(tau >= 0.0, "switch threshold must be non-negative");
  const auto terms = tuner_terms(dataset, target, model, &logging);
  std::vector<double> scratch;
  return switch_objective(terms, tau, scratch);
}

double tune_switch_dr(const LoggedDataset& dataset, const SoftmaxLinearPolicy& target,
                      const SoftmaxLinearPolicy& logging, const RewardModel& model,
                      std::span<const double> grid) {
  require(!grid.empty(), "tuning grid is empty");
  const auto terms = tuner_terms(dataset, target, model, &logging);
  std::vector<double> scratch;
  return grid_argmin(grid, [&](double tau) { return switch_objective(terms, tau, scratch).value(); });
}

TunerObjective dr_shrink_objective(const LoggedDataset& dataset, const SoftmaxLinearPolicy& target,
                                   const RewardModel& model, double lambda, ShrinkMode mode) {
  require(lambda >= 0.0, "shrinkage lambda must be non-negative");
  const auto terms = tuner_terms(dataset, target, model, nullptr);
  std::vector<double> scratch;
  return shrink_objective(terms, lambda, mode, scratch);
}

double tune_dr_shrink(const LoggedDataset& dataset, const SoftmaxLinearPolicy& target,
                      const RewardModel& model, std::span<const double> grid, ShrinkMode mode) {
  require(!grid.empty(), "tuning grid is empty");
  const auto terms = tuner_terms(dataset, target, model, nullptr);
  std::vector<double> scratch;
  return grid_argmin(grid, [&](double lambda) {
    return shrink_objective(terms, lambda, mode, scratch).value();
  });
}

double power_mean_weight(double weight, double lambda, double s) {
  if (lambda <= 0.0) return weight;
  if (lambda >= 1.0) return 1.0;
  if (weight <= 0.0) return std::pow(lambda, 1.0 / s);
  // log((1 - lambda) w^s + lambda) via log-sum-exp, so w^s never overflows.
  const double a = std::log1p(-lambda) + s * std::log(weight);
  const double b = std::log(lambda);
  const double top = std::max(a, b);
  const double log_sum = top + std::log(std::exp(a - top) + std::exp(b - top));
  return std::exp(log_sum / s);
}

double ips_lambda_equation(std::span<const double> weights, double lambda, double delta) {
  require(!weights.empty(), "IPS-lambda equation needs at least one weight");
  const auto n = static_cast<double>(weights.size());
  const double s = std::pow(n, 0.25);
  double second_moment = 0.0;
  for (double w : weights) {
    const double corrected = power_mean_weight(w, lambda, s);
    second_moment += corrected * corrected;
  }
  second_moment /= n;
  return lambda * lambda * second_moment - 2.0 * std::log(1.0 / delta) / (3.0 * n);
}

double tune_ips_lambda(std::span<const double> weights, double delta) {
  require(delta > 0.0 && delta <= 1.0, "IPS-lambda confidence delta must lie in (0, 1]");
  require(!weights.empty(), "IPS-lambda tuning needs at least one weight");
  const auto g = [&](double lambda) { return ips_lambda_equation(weights, lambda, delta); };

  if (g(0.0) >= 0.0) return 0.0;
  if (g(1.0) < 0.0) return 1.0;

  // Scan 100 evenly spaced points up to the first sign change and require g
  // to be non-decreasing there; the bisection below relies on it.
  constexpr int kProbes = 100;
  double prev_lambda = 0.0;
  double prev_value = g(0.0);
  double lo = 0.0;
  double hi = 1.0;
  for (int j = 1; j < kProbes; ++j) {
    const double lambda = static_cast<double>(j) / static_cast<double>(kProbes - 1);
    const double value = g(lambda);
    if (value < prev_value) {
      std::ostringstream msg;
      msg << "IPS-lambda equation decreases before its first root: g(" << prev_lambda
          << ") = " << prev_value << " > g(" << lambda << ") = " << value;
      throw NumericalError(msg.str());
    }
    if (value >= 0.0) {
      lo = prev_lambda;
      hi = lambda;
      break;
    }
    prev_lambda = lambda;
    prev_value = value;
  }

  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double tune_ips_lambda(const LoggedDataset& dataset, const SoftmaxLinearPolicy& target,
                       double delta) {
  return tune_ips_lambda(propensity_weights(target, dataset), delta);
}

std::vector<EstimatorSpec> candidates_from_grid(EstimatorKind kind, std::span<const double> grid) {
  require(is_tunable(kind), std::string(to_string(kind)) + " has no hyper-parameter");
  require(!grid.empty(), "cannot build candidates from an empty grid");
  std::vector<EstimatorSpec> out;
  out.reserve(grid.size());
  for (double value : grid) out.push_back(EstimatorSpec::make(kind, value));
  return out;
}

std::vector<EstimatorSpec> candidates_from_grid(const HyperGrid& grid) {
  require_strictly_ascending(grid.values);
  return candidates_from_grid(grid.kind, grid.values);
}

}  // namespace opecv

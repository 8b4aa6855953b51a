#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "opecv/dataset.hpp"
#include "opecv/estimators.hpp"
#include "opecv/policy.hpp"
#include "opecv/reward_model.hpp"

namespace opecv {

// (validator - evaluated)^2
double squared_loss(double evaluated, double validator);

// mean(L) + sqrt(sum (L_k - mean)^2 / (K - 1)); needs at least two losses.
double one_se_score(std::span<const double> losses);

inline constexpr double kMinTrainFraction = 0.1;
inline constexpr double kMaxTrainFraction = 0.9;

// var / (var + validator_var) clamped to [0.1, 0.9]; 0.5 when both are 0.
double ocv_train_fraction(double candidate_variance, double validator_variance);

struct CandidateStats {
  EstimatorSpec spec;
  double full_estimate = 0.0;
  double full_variance = 0.0;
  double train_fraction = 0.5;
  std::size_t n_train = 0;
  std::size_t n_validation = 0;
  std::vector<double> losses;  // one per split
  double mean_loss = 0.0;
  double score = 0.0;
};

struct SlopeState {
  std::vector<EstimatorSpec> order;  // decreasing variance
  std::vector<double> estimates;
  std::vector<double> lower;
  std::vector<double> upper;
  std::size_t stop_index = 0;  // index of the chosen entry in `order`
};

struct SelectionResult {
  EstimatorSpec chosen;
  std::size_t chosen_index = 0;
  double final_estimate = 0.0;
  std::vector<CandidateStats> per_candidate;
  std::uint64_t seed = 0;
  double validator_estimate = 0.0;
  double validator_variance = 0.0;
  // Some candidate had zero variance alongside a zero-variance validator and
  // fell back to an even split.
  bool degenerate_variance = false;
  std::optional<SlopeState> slope;
};

struct OcvOptions {
  const SoftmaxLinearPolicy* logging = nullptr;
  double ridge = kDefaultRidge;
  // Permit DM or other biased validators (ablation only).
  bool allow_biased_validator = false;
  // false scores candidates by mean loss alone.
  bool one_se = true;
  // Overrides the variance-proportional split for every candidate.
  std::optional<double> fixed_train_fraction;
};

// Monte Carlo cross-validated estimator selection. Split k of every
// candidate is drawn from sub-seed (seed, k), so candidates with equal
// training fractions see identical splits.
SelectionResult ocv_select(const SoftmaxLinearPolicy& target, const LoggedDataset& dataset,
                           std::span<const EstimatorSpec> candidates,
                           const EstimatorSpec& validator, std::size_t splits,
                           std::uint64_t seed, const OcvOptions& options = {});

// Index chosen by the interval walk: stop at the first interval that misses
// any earlier one and return its predecessor, else the last index.
std::size_t slope_walk(std::span<const std::pair<double, double>> intervals);

// Candidates must be ordered by decreasing variance. Intervals are
// estimate +- 2 sqrt(variance of the mean).
SelectionResult slope_select(std::span<const EstimatorSpec> ordered_candidates,
                             const LoggedDataset& dataset, const SoftmaxLinearPolicy& target,
                             const EstimateOptions& options = {});

// chosen_loss - min(candidate_losses), with the chosen loss itself counted
// among the candidates so the result is never negative.
double selection_regret(double chosen_loss, std::span<const double> candidate_losses);

std::string selection_to_json(const SelectionResult& result);

}  // namespace opecv

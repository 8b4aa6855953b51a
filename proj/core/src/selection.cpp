#include "opecv/selection.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "json_util.hpp"
#include "opecv/error.hpp"
#include "opecv/random.hpp"
#include "opecv/serialization.hpp"
#include "opecv/stats.hpp"

namespace opecv {

double squared_loss(double evaluated, double validator) {
  const double diff = validator - evaluated;
  return diff * diff;
}

double one_se_score(std::span<const double> losses) {
  require(losses.size() >= 2, "one-SE score needs at least two split losses");
  double mean = 0.0;
  for (double l : losses) mean += l;
  mean /= static_cast<double>(losses.size());
  double ss = 0.0;
  for (double l : losses) ss += (l - mean) * (l - mean);
  return mean + std::sqrt(ss / static_cast<double>(losses.size() - 1));
}

double ocv_train_fraction(double candidate_variance, double validator_variance) {
  require(candidate_variance >= 0.0 && validator_variance >= 0.0,
          "variances must be non-negative");
  const double total = candidate_variance + validator_variance;
  if (total <= 0.0) return 0.5;
  return std::clamp(candidate_variance / total, kMinTrainFraction, kMaxTrainFraction);
}

namespace {

struct SplitKey {
  std::size_t n_train;
  std::size_t k;
  auto operator<=>(const SplitKey&) const = default;
};

// Validator value and training-side reward model per distinct split; every
// candidate with the same training size reuses them.
struct SplitCacheEntry {
  std::optional<double> validator_value;
  std::optional<RewardModel> train_model;
};

}  // namespace

SelectionResult ocv_select(const SoftmaxLinearPolicy& target, const LoggedDataset& dataset,
                           std::span<const EstimatorSpec> candidates,
                           const EstimatorSpec& validator, std::size_t splits,
                           std::uint64_t seed, const OcvOptions& options) {
  require(!candidates.empty(), "OCV needs at least one candidate");
  require(splits >= 2, "OCV needs K >= 2 splits");
  require(dataset.n() >= 2, "OCV needs at least two logged samples");
  require(options.allow_biased_validator || is_unbiased(validator.kind),
          "validator " + validator.label() + " is biased; use IPS or DR");
  if (options.fixed_train_fraction) {
    require(*options.fixed_train_fraction > 0.0 && *options.fixed_train_fraction < 1.0,
            "fixed train fraction must lie in (0, 1)");
  }
  for (const auto& c : candidates) validate(c);
  validate(validator);

  const EstimateOptions est_options{options.logging, options.ridge};
  const auto full_validator = estimate(validator, dataset, target, est_options);

  SelectionResult result;
  result.seed = seed;
  result.validator_estimate = full_validator.estimate;
  result.validator_variance = full_validator.variance_of_mean;
  result.per_candidate.reserve(candidates.size());

  std::map<SplitKey, SplitCacheEntry> cache;
  const std::size_t n = dataset.n();

  for (const auto& spec : candidates) {
    CandidateStats stats;
    stats.spec = spec;
    const auto full = estimate(spec, dataset, target, est_options);
    stats.full_estimate = full.estimate;
    stats.full_variance = full.variance_of_mean;
    if (options.fixed_train_fraction) {
      stats.train_fraction = *options.fixed_train_fraction;
    } else {
      if (full.variance_of_mean <= 0.0 && full_validator.variance_of_mean <= 0.0) {
        result.degenerate_variance = true;
      }
      stats.train_fraction = ocv_train_fraction(full.variance_of_mean,
                                                full_validator.variance_of_mean);
    }
    stats.n_train = train_size(n, stats.train_fraction);
    stats.n_validation = n - stats.n_train;

    stats.losses.reserve(splits);
    for (std::size_t k = 0; k < splits; ++k) {
      auto rng = make_rng({seed, k});
      const auto split = mc_split(dataset, stats.train_fraction, rng);
      auto& entry = cache[SplitKey{stats.n_train, k}];
      if (!entry.validator_value) {
        entry.validator_value = estimate(validator, split.validation, target, est_options).estimate;
      }
      double evaluated = 0.0;
      if (needs_reward_model(spec.kind)) {
        if (!entry.train_model) entry.train_model = fit_ridge(split.train, options.ridge);
        evaluated =
            estimate_with_model(spec, split.train, target, *entry.train_model, options.logging)
                .estimate;
      } else {
        evaluated = estimate(spec, split.train, target, est_options).estimate;
      }
      stats.losses.push_back(squared_loss(evaluated, *entry.validator_value));
    }
    double mean = 0.0;
    for (double l : stats.losses) mean += l;
    stats.mean_loss = mean / static_cast<double>(splits);
    stats.score = options.one_se ? one_se_score(stats.losses) : stats.mean_loss;
    result.per_candidate.push_back(std::move(stats));
  }

  std::size_t best = 0;
  for (std::size_t j = 1; j < result.per_candidate.size(); ++j) {
    if (result.per_candidate[j].score < result.per_candidate[best].score) best = j;
  }
  result.chosen_index = best;
  result.chosen = result.per_candidate[best].spec;
  result.final_estimate = result.per_candidate[best].full_estimate;
  return result;
}

std::size_t slope_walk(std::span<const std::pair<double, double>> intervals) {
  require(!intervals.empty(), "SLOPE needs at least one candidate");
  // I_j meets every earlier interval iff lo_j <= min(upper) and hi_j >= max(lower).
  double max_lower = intervals[0].first;
  double min_upper = intervals[0].second;
  for (std::size_t j = 1; j < intervals.size(); ++j) {
    const auto [lo, hi] = intervals[j];
    require(lo <= hi, "SLOPE interval has lower > upper");
    if (lo > min_upper || hi < max_lower) return j - 1;
    max_lower = std::max(max_lower, lo);
    min_upper = std::min(min_upper, hi);
  }
  return intervals.size() - 1;
}

SelectionResult slope_select(std::span<const EstimatorSpec> ordered_candidates,
                             const LoggedDataset& dataset, const SoftmaxLinearPolicy& target,
                             const EstimateOptions& options) {
  require(!ordered_candidates.empty(), "SLOPE needs at least one candidate");
  SelectionResult result;
  SlopeState state;
  std::vector<std::pair<double, double>> intervals;
  for (const auto& spec : ordered_candidates) {
    const auto est = estimate(spec, dataset, target, options);
    const double sigma = std::sqrt(est.variance_of_mean);
    CandidateStats stats;
    stats.spec = spec;
    stats.full_estimate = est.estimate;
    stats.full_variance = est.variance_of_mean;
    result.per_candidate.push_back(stats);
    state.order.push_back(spec);
    state.estimates.push_back(est.estimate);
    state.lower.push_back(est.estimate - 2.0 * sigma);
    state.upper.push_back(est.estimate + 2.0 * sigma);
    intervals.emplace_back(state.lower.back(), state.upper.back());
  }
  state.stop_index = slope_walk(intervals);
  result.chosen_index = state.stop_index;
  result.chosen = ordered_candidates[state.stop_index];
  result.final_estimate = state.estimates[state.stop_index];
  result.slope = std::move(state);
  return result;
}

double selection_regret(double chosen_loss, std::span<const double> candidate_losses) {
  double best = chosen_loss;
  for (double l : candidate_losses) best = std::min(best, l);
  return chosen_loss - best;
}

namespace {

detail::json real_json(double v) {
  if (std::isfinite(v)) return v;
  return format_real(v);
}

}  // namespace

std::string selection_to_json(const SelectionResult& result) {
  using detail::json;
  json j;
  j["chosen"] = detail::spec_json(result.chosen);
  j["chosen_label"] = result.chosen.label();
  j["chosen_index"] = result.chosen_index;
  j["final_estimate"] = real_json(result.final_estimate);
  j["seed"] = result.seed;
  j["validator_estimate"] = real_json(result.validator_estimate);
  j["validator_variance"] = real_json(result.validator_variance);
  j["degenerate_variance"] = result.degenerate_variance;
  json candidates = json::array();
  for (const auto& c : result.per_candidate) {
    json cj;
    cj["spec"] = detail::spec_json(c.spec);
    cj["label"] = c.spec.label();
    cj["full_estimate"] = real_json(c.full_estimate);
    cj["full_variance"] = real_json(c.full_variance);
    cj["train_fraction"] = c.train_fraction;
    cj["n_train"] = c.n_train;
    cj["n_validation"] = c.n_validation;
    json losses = json::array();
    for (double l : c.losses) losses.push_back(real_json(l));
    cj["losses"] = std::move(losses);
    cj["mean_loss"] = real_json(c.mean_loss);
    cj["score"] = real_json(c.score);
    candidates.push_back(std::move(cj));
  }
  j["per_candidate"] = std::move(candidates);
  if (result.slope) {
    json sj;
    json order = json::array();
    for (const auto& s : result.slope->order) order.push_back(s.label());
    sj["order"] = std::move(order);
    sj["estimates"] = result.slope->estimates;
    sj["lower"] = result.slope->lower;
    sj["upper"] = result.slope->upper;
    sj["stop_index"] = result.slope->stop_index;
    j["slope"] = std::move(sj);
  }
  return j.dump(2);
}

}  // namespace opecv

#include "opecv/estimators.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>

#include "opecv/error.hpp"
#include "opecv/serialization.hpp"

namespace opecv {

namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

void check_compatible(const LoggedDataset& dataset, const SoftmaxLinearPolicy& policy) {
  require(policy.m() == dataset.m(), "policy and dataset disagree on the action count");
  require(policy.d() == dataset.d(), "policy and dataset disagree on the context dimension");
}

void check_compatible(const LoggedDataset& dataset, const RewardModel& model) {
  require(model.m() == dataset.m(), "reward model and dataset disagree on the action count");
  require(model.d() == dataset.d(), "reward model and dataset disagree on the context dimension");
}

// Per-row pieces shared by the model-based estimators: the propensity weight,
// the residual r_i - f(x_i, a_i) and the DM term sum_a pi(a|x_i) f(x_i, a).
struct ModelTerms {
  std::vector<double> weights;
  std::vector<double> residuals;
  std::vector<double> dm;
};

ModelTerms model_terms(const LoggedDataset& dataset, const SoftmaxLinearPolicy& target,
                       const RewardModel& model) {
  check_compatible(dataset, target);
  check_compatible(dataset, model);
  const std::size_t m = dataset.m();
  ModelTerms terms;
  terms.weights.resize(dataset.n());
  terms.residuals.resize(dataset.n());
  terms.dm.resize(dataset.n());
  std::vector<double> probs(m);
  std::vector<double> predictions(m);
  for (std::size_t i = 0; i < dataset.n(); ++i) {
    const auto x = dataset.context(i);
    const auto a = static_cast<std::size_t>(dataset.action(i));
    target.action_probs(x, probs);
    model.predict_all(x, predictions);
    double dm = 0.0;
    for (std::size_t b = 0; b < m; ++b) dm += probs[b] * predictions[b];
    terms.weights[i] = probs[a] / dataset.logging_propensity(i);
    terms.residuals[i] = dataset.reward(i) - predictions[a];
    terms.dm[i] = dm;
  }
  return terms;
}

}  // namespace

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::IPS: return "IPS";
    case EstimatorKind::DM: return "DM";
    case EstimatorKind::DR: return "DR";
    case EstimatorKind::TruncatedIPS: return "TruncatedIPS";
    case EstimatorKind::SwitchDR: return "SwitchDR";
    case EstimatorKind::CAB: return "CAB";
    case EstimatorKind::DRos: return "DRos";
    case EstimatorKind::DRps: return "DRps";
    case EstimatorKind::IPSLambda: return "IPSLambda";
    case EstimatorKind::GroupIPS: return "GroupIPS";
  }
  return "?";
}

EstimatorKind parse_kind(std::string_view name) {
  for (EstimatorKind kind : kAllKinds) {
    if (iequals(name, to_string(kind))) return kind;
  }
  if (iequals(name, "IPS-lambda") || iequals(name, "IPS-λ")) return EstimatorKind::IPSLambda;
  throw InvalidInput("unknown estimator kind '" + std::string(name) + "'");
}

bool is_tunable(EstimatorKind kind) {
  return kind != EstimatorKind::IPS && kind != EstimatorKind::DM && kind != EstimatorKind::DR;
}

bool needs_reward_model(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::IPS:
    case EstimatorKind::TruncatedIPS:
    case EstimatorKind::IPSLambda:
      return false;
    default:
      return true;
  }
}

bool needs_logging_policy(EstimatorKind kind) {
  return kind == EstimatorKind::CAB || kind == EstimatorKind::GroupIPS;
}

bool is_unbiased(EstimatorKind kind) {
  return kind == EstimatorKind::IPS || kind == EstimatorKind::DR;
}

void validate(const EstimatorSpec& spec) {
  const std::string name(to_string(spec.kind));
  if (!is_tunable(spec.kind)) {
    require(!spec.hyper.has_value(), name + " takes no hyper-parameter");
    return;
  }
  require(spec.hyper.has_value(), name + " requires a hyper-parameter");
  const double h = *spec.hyper;
  require(!std::isnan(h), name + " hyper-parameter is NaN");
  switch (spec.kind) {
    case EstimatorKind::IPSLambda:
      require(h >= 0.0 && h <= 1.0, "IPSLambda hyper-parameter must lie in [0, 1]");
      break;
    case EstimatorKind::GroupIPS:
      require(h >= 1.0 && std::isfinite(h) && h == std::floor(h),
              "GroupIPS cluster count must be an integer >= 1");
      break;
    default:
      require(h >= 0.0, name + " hyper-parameter must be non-negative");
      break;
  }
}

EstimatorSpec EstimatorSpec::make(EstimatorKind kind, std::optional<double> hyper) {
  EstimatorSpec spec{kind, hyper};
  validate(spec);
  return spec;
}

std::string EstimatorSpec::label() const {
  std::string out(to_string(kind));
  if (hyper) out += "(" + format_real(*hyper) + ")";
  return out;
}

EstimatorSpec parse_spec(std::string_view text) {
  const auto sep = text.find_first_of(":=(");
  if (sep == std::string_view::npos) return EstimatorSpec::make(parse_kind(text));
  const EstimatorKind kind = parse_kind(text.substr(0, sep));
  std::string_view rest = text.substr(sep + 1);
  if (text[sep] == '(') {
    require(!rest.empty() && rest.back() == ')', "unbalanced parenthesis in estimator spec");
    rest.remove_suffix(1);
  }
  std::string value(rest);
  double hyper = 0.0;
  if (iequals(value, "inf") || iequals(value, "infinity")) {
    hyper = std::numeric_limits<double>::infinity();
  } else {
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), hyper);
    require(ec == std::errc() && ptr == value.data() + value.size(),
            "malformed hyper-parameter '" + value + "'");
  }
  return EstimatorSpec::make(kind, hyper);
}

PerSampleValues ips_contributions(const LoggedDataset& dataset, const SoftmaxLinearPolicy& target) {
  check_compatible(dataset, target);
  auto weights = propensity_weights(target, dataset);
  for (std::size_t i = 0; i < dataset.n(); ++i) weights[i] *= dataset.reward(i);
  return {std::move(weights)};
}

PerSampleValues dm_contributions(const LoggedDataset& dataset, const SoftmaxLinearPolicy& target,
                                 const RewardModel& model) {
  return {model_terms(dataset, target, model).dm};
}

PerSampleValues dr_contributions(const LoggedDataset& dataset, const SoftmaxLinearPolicy& target,
                                 const RewardModel& model) {
  auto t = model_terms(dataset, target, model);
  for (std::size_t i = 0; i < dataset.n(); ++i) t.dm[i] += t.weights[i] * t.residuals[i];
  return {std::move(t.dm)};
}

PerSampleValues truncated_ips_contributions(const LoggedDataset& dataset,
                                            const SoftmaxLinearPolicy& target, double clip) {
  require(clip >= 0.0, "truncation constant must be non-negative");
  check_compatible(dataset, target);
  auto weights = propensity_weights(target, dataset);
  for (std::size_t i = 0; i < dataset.n(); ++i) {
    weights[i] = std::min(clip, weights[i]) * dataset.reward(i);
  }
  return {std::move(weights)};
}

PerSampleValues switch_dr_contributions(const LoggedDataset& dataset,
                                        const SoftmaxLinearPolicy& target,
                                        const RewardModel& model, double tau) {
  require(tau >= 0.0, "switch threshold must be non-negative");
  auto t = model_terms(dataset, target, model);
  for (std::size_t i = 0; i < dataset.n(); ++i) {
    if (t.weights[i] <= tau) t.dm[i] += t.weights[i] * t.residuals[i];
  }
  return {std::move(t.dm)};
}

PerSampleValues cab_contributions(const LoggedDataset& dataset, const SoftmaxLinearPolicy& target,
                                  const SoftmaxLinearPolicy& logging, const RewardModel& model,
                                  double blend) {
  require(blend >= 0.0, "CAB blending constant must be non-negative");
  check_compatible(dataset, target);
  check_compatible(dataset, logging);
  check_compatible(dataset, model);
  // min(M / w, 1); w = 0 is the limit w -> 0+, i.e. 1.
  const auto capped_ratio = [blend](double w) {
    if (w <= 0.0) return 1.0;
    return std::min(blend / w, 1.0);
  };
  const std::size_t m = dataset.m();
  std::vector<double> target_probs(m);
  std::vector<double> logging_probs(m);
  std::vector<double> predictions(m);
  PerSampleValues out;
  out.values.resize(dataset.n());
  for (std::size_t i = 0; i < dataset.n(); ++i) {
    const auto x = dataset.context(i);
    target.action_probs(x, target_probs);
    logging.action_probs(x, logging_probs);
    model.predict_all(x, predictions);
    double blended_dm = 0.0;
    for (std::size_t a = 0; a < m; ++a) {
      if (target_probs[a] <= 0.0) continue;
      const double w = target_probs[a] / logging_probs[a];
      const double alpha = 1.0 - capped_ratio(w);
      blended_dm += target_probs[a] * alpha * predictions[a];
    }
    const auto logged = static_cast<std::size_t>(dataset.action(i));
    const double w_logged = target_probs[logged] / dataset.logging_propensity(i);
    out.values[i] = blended_dm + w_logged * capped_ratio(w_logged) * dataset.reward(i);
  }
  return out;
}

double shrink_weight(double weight, double lambda, ShrinkMode mode) {
  if (mode == ShrinkMode::Pessimistic) return std::min(lambda, weight);
  if (lambda <= 0.0) return 0.0;
  if (std::isinf(lambda)) return weight;
  return lambda * weight / (weight * weight + lambda);
}

PerSampleValues dr_shrink_contributions(const LoggedDataset& dataset,
                                        const SoftmaxLinearPolicy& target,
                                        const RewardModel& model, double lambda, ShrinkMode mode) {
  require(lambda >= 0.0, "shrinkage lambda must be non-negative");
  auto t = model_terms(dataset, target, model);
  for (std::size_t i = 0; i < dataset.n(); ++i) {
    t.dm[i] += shrink_weight(t.weights[i], lambda, mode) * t.residuals[i];
  }
  return {std::move(t.dm)};
}

double ips_lambda_weight(double weight, double lambda) {
  return weight / (1.0 - lambda + lambda * weight);
}

PerSampleValues ips_lambda_contributions(const LoggedDataset& dataset,
                                         const SoftmaxLinearPolicy& target, double lambda) {
  require(lambda >= 0.0 && lambda <= 1.0, "IPS-lambda must lie in [0, 1]");
  check_compatible(dataset, target);
  auto weights = propensity_weights(target, dataset);
  for (std::size_t i = 0; i < dataset.n(); ++i) {
    weights[i] = ips_lambda_weight(weights[i], lambda) * dataset.reward(i);
  }
  return {std::move(weights)};
}

ClusterMap::ClusterMap(RewardModel model, std::size_t cluster_count)
    : model_(std::move(model)), cluster_count_(cluster_count) {
  require(cluster_count_ >= 1, "cluster count must be at least 1");
}

std::size_t ClusterMap::bin(double prediction, std::size_t cluster_count) {
  const double clamped = std::clamp(prediction, 0.0, 1.0);
  const auto raw = static_cast<std::size_t>(std::floor(clamped * static_cast<double>(cluster_count)));
  return std::min(raw, cluster_count - 1);
}

std::size_t ClusterMap::cluster(std::span<const double> context, std::size_t action) const {
  return bin(model_.predict(context, action), cluster_count_);
}

std::vector<double> ClusterMap::marginals(const SoftmaxLinearPolicy& policy,
                                          std::span<const double> context) const {
  require(policy.m() == model_.m(), "policy and cluster map disagree on the action count");
  const auto probs = policy.action_probs(context);
  std::vector<double> out(cluster_count_, 0.0);
  for (std::size_t a = 0; a < probs.size(); ++a) out[cluster(context, a)] += probs[a];
  return out;
}

ClusterMap build_cluster_map(const RewardModel& model, std::size_t cluster_count) {
  return ClusterMap(model, cluster_count);
}

PerSampleValues group_ips_contributions(const LoggedDataset& dataset,
                                        const SoftmaxLinearPolicy& target,
                                        const SoftmaxLinearPolicy& logging, const ClusterMap& map) {
  check_compatible(dataset, target);
  check_compatible(dataset, logging);
  const std::size_t m = dataset.m();
  std::vector<double> target_probs(m);
  std::vector<double> logging_probs(m);
  PerSampleValues out;
  out.values.resize(dataset.n());
  for (std::size_t i = 0; i < dataset.n(); ++i) {
    const auto x = dataset.context(i);
    target.action_probs(x, target_probs);
    logging.action_probs(x, logging_probs);
    const std::size_t g = map.cluster(x, static_cast<std::size_t>(dataset.action(i)));
    double target_mass = 0.0;
    double logging_mass = 0.0;
    for (std::size_t a = 0; a < m; ++a) {
      if (map.cluster(x, a) != g) continue;
      target_mass += target_probs[a];
      logging_mass += logging_probs[a];
    }
    if (!(logging_mass > 0.0)) {
      throw NumericalError("GroupIPS: logging policy puts zero mass on the cluster of sample " +
                           std::to_string(i));
    }
    out.values[i] = target_mass / logging_mass * dataset.reward(i);
  }
  return out;
}

EstimateResult estimate_with_model(const EstimatorSpec& spec, const LoggedDataset& dataset,
                                   const SoftmaxLinearPolicy& target, const RewardModel& model,
                                   const SoftmaxLinearPolicy* logging) {
  validate(spec);
  require(!dataset.empty(), "cannot estimate from an empty dataset");
  if (needs_logging_policy(spec.kind)) {
    require(logging != nullptr,
            std::string(to_string(spec.kind)) + " needs the full logging policy");
  }
  const double h = spec.hyper.value_or(0.0);
  PerSampleValues values;
  switch (spec.kind) {
    case EstimatorKind::IPS: values = ips_contributions(dataset, target); break;
    case EstimatorKind::DM: values = dm_contributions(dataset, target, model); break;
    case EstimatorKind::DR: values = dr_contributions(dataset, target, model); break;
    case EstimatorKind::TruncatedIPS: values = truncated_ips_contributions(dataset, target, h); break;
    case EstimatorKind::SwitchDR: values = switch_dr_contributions(dataset, target, model, h); break;
    case EstimatorKind::CAB: values = cab_contributions(dataset, target, *logging, model, h); break;
    case EstimatorKind::DRos:
      values = dr_shrink_contributions(dataset, target, model, h, ShrinkMode::Optimistic);
      break;
    case EstimatorKind::DRps:
      values = dr_shrink_contributions(dataset, target, model, h, ShrinkMode::Pessimistic);
      break;
    case EstimatorKind::IPSLambda: values = ips_lambda_contributions(dataset, target, h); break;
    case EstimatorKind::GroupIPS:
      values = group_ips_contributions(dataset, target, *logging,
                                       build_cluster_map(model, static_cast<std::size_t>(h)));
      break;
  }
  const auto mv = mean_and_variance(values);
  return {mv.estimate, mv.variance_of_mean, std::move(values)};
}

EstimateResult estimate(const EstimatorSpec& spec, const LoggedDataset& dataset,
                        const SoftmaxLinearPolicy& target, const EstimateOptions& options) {
  validate(spec);
  require(!dataset.empty(), "cannot estimate from an empty dataset");
  const RewardModel model = needs_reward_model(spec.kind)
                                ? fit_ridge(dataset, options.ridge)
                                : RewardModel::zero(dataset.d(), dataset.m());
  return estimate_with_model(spec, dataset, target, model, options.logging);
}

}  // namespace opecv

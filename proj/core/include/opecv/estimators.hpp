#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "opecv/dataset.hpp"
#include "opecv/policy.hpp"
#include "opecv/reward_model.hpp"
#include "opecv/stats.hpp"

namespace opecv {

enum class EstimatorKind {
  IPS,
  DM,
  DR,
  TruncatedIPS,
  SwitchDR,
  CAB,
  DRos,
  DRps,
  IPSLambda,
  GroupIPS,
};

inline constexpr EstimatorKind kAllKinds[] = {
    EstimatorKind::IPS,      EstimatorKind::DM,   EstimatorKind::DR,
    EstimatorKind::TruncatedIPS, EstimatorKind::SwitchDR, EstimatorKind::CAB,
    EstimatorKind::DRos,     EstimatorKind::DRps, EstimatorKind::IPSLambda,
    EstimatorKind::GroupIPS,
};

std::string_view to_string(EstimatorKind kind);
// Accepts the canonical names above, case-insensitively.
EstimatorKind parse_kind(std::string_view name);

bool is_tunable(EstimatorKind kind);
bool needs_reward_model(EstimatorKind kind);
// CAB looks at weights of actions that were not logged and GroupIPS needs
// cluster marginals; both require the full logging policy.
bool needs_logging_policy(EstimatorKind kind);
bool is_unbiased(EstimatorKind kind);

// One selection candidate: an estimator kind plus its hyper-parameter
// (M, tau, lambda or cluster count). The hyper-parameter is present iff the
// kind is tunable.
struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::IPS;
  std::optional<double> hyper;

  // Validating constructor.
  static EstimatorSpec make(EstimatorKind kind, std::optional<double> hyper = std::nullopt);

  // "DR", "TruncatedIPS(12.5)", "GroupIPS(8)".
  std::string label() const;

  friend bool operator==(const EstimatorSpec&, const EstimatorSpec&) = default;
};

void validate(const EstimatorSpec& spec);

// Parses "IPS", "TruncatedIPS:10", "TruncatedIPS(10)" or "TruncatedIPS=10".
EstimatorSpec parse_spec(std::string_view text);

enum class ShrinkMode { Optimistic, Pessimistic };

// v_i = w_i r_i
PerSampleValues ips_contributions(const LoggedDataset& dataset, const SoftmaxLinearPolicy& target);

// v_i = sum_a pi(a|x_i) f(x_i, a)
PerSampleValues dm_contributions(const LoggedDataset& dataset, const SoftmaxLinearPolicy& target,
                                 const RewardModel& model);

// v_i = w_i (r_i - f(x_i, a_i)) + sum_a pi(a|x_i) f(x_i, a)
PerSampleValues dr_contributions(const LoggedDataset& dataset, const SoftmaxLinearPolicy& target,
                                 const RewardModel& model);

// v_i = min(M, w_i) r_i
PerSampleValues truncated_ips_contributions(const LoggedDataset& dataset,
                                            const SoftmaxLinearPolicy& target, double clip);

// Residual correction only where w_i <= tau.
PerSampleValues switch_dr_contributions(const LoggedDataset& dataset,
                                        const SoftmaxLinearPolicy& target,
                                        const RewardModel& model, double tau);

// Blends DM and IPS per action with alpha_i(a) = 1 - min(M / w(x_i, a), 1)
// and beta_i = min(M / w_i, 1). Actions with zero target probability drop out.
PerSampleValues cab_contributions(const LoggedDataset& dataset, const SoftmaxLinearPolicy& target,
                                  const SoftmaxLinearPolicy& logging, const RewardModel& model,
                                  double blend);

// Shrunk weight: optimistic lambda w / (w^2 + lambda), pessimistic min(lambda, w).
double shrink_weight(double weight, double lambda, ShrinkMode mode);

PerSampleValues dr_shrink_contributions(const LoggedDataset& dataset,
                                        const SoftmaxLinearPolicy& target,
                                        const RewardModel& model, double lambda, ShrinkMode mode);

// Harmonic correction w / (1 - lambda + lambda w).
double ips_lambda_weight(double weight, double lambda);

PerSampleValues ips_lambda_contributions(const LoggedDataset& dataset,
                                         const SoftmaxLinearPolicy& target, double lambda);

// Groups (context, action) pairs by uniform bins of predicted reward over
// [0, 1]; a prediction of exactly 1 lands in the last bin.
class ClusterMap {
 public:
  ClusterMap(RewardModel model, std::size_t cluster_count);

  std::size_t cluster_count() const { return cluster_count_; }
  std::size_t cluster(std::span<const double> context, std::size_t action) const;
  static std::size_t bin(double prediction, std::size_t cluster_count);

  // pi(g | x) for every cluster g.
  std::vector<double> marginals(const SoftmaxLinearPolicy& policy,
                                std::span<const double> context) const;

 private:
  RewardModel model_;
  std::size_t cluster_count_;
};

ClusterMap build_cluster_map(const RewardModel& model, std::size_t cluster_count);

// v_i = pi(g_i|x_i) / pi_0(g_i|x_i) r_i with g_i the cluster of (x_i, a_i).
// Throws NumericalError if the logging marginal of an observed cluster is 0.
PerSampleValues group_ips_contributions(const LoggedDataset& dataset,
                                        const SoftmaxLinearPolicy& target,
                                        const SoftmaxLinearPolicy& logging, const ClusterMap& map);

struct EstimateResult {
  double estimate = 0.0;
  double variance_of_mean = 0.0;
  PerSampleValues contributions;
};

struct EstimateOptions {
  // Needed by CAB and GroupIPS.
  const SoftmaxLinearPolicy* logging = nullptr;
  double ridge = kDefaultRidge;
};

// Dispatches on the spec's kind. Kinds that use a reward model fit it on
// `dataset` itself, so the estimate is end-to-end for the data it is given.
EstimateResult estimate(const EstimatorSpec& spec, const LoggedDataset& dataset,
                        const SoftmaxLinearPolicy& target, const EstimateOptions& options = {});

// Same dispatch with a caller-provided reward model.
EstimateResult estimate_with_model(const EstimatorSpec& spec, const LoggedDataset& dataset,
                                   const SoftmaxLinearPolicy& target, const RewardModel& model,
                                   const SoftmaxLinearPolicy* logging = nullptr);

}  // namespace opecv

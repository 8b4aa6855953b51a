#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "opecv/error.hpp"
#include "opecv/estimators.hpp"
#include "opecv/stats.hpp"
#include "test_support.hpp"

using namespace opecv;
using opecv::testing::DiscreteBandit;
using opecv::testing::random_logged;
using opecv::testing::random_policy;
using opecv::testing::uniform;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Context-free policy (d = 1, x = 1) with the given action probabilities.
SoftmaxLinearPolicy fixed_probs(const std::vector<double>& probs) {
  std::vector<std::vector<double>> w;
  for (double p : probs) w.push_back({p > 0.0 ? std::log(p) : -1e4});
  return SoftmaxLinearPolicy(w, 1.0);
}

const std::vector<double> kOne{1.0};

double mean(const PerSampleValues& v) { return mean_and_variance(v).estimate; }

void expect_same(const PerSampleValues& a, const PerSampleValues& b, double tol) {
  ASSERT_EQ(a.values.size(), b.values.size());
  for (std::size_t i = 0; i < a.values.size(); ++i) ASSERT_NEAR(a.values[i], b.values[i], tol) << i;
}

double max_weight(const LoggedDataset& data, const SoftmaxLinearPolicy& target) {
  double w = 0.0;
  for (double x : propensity_weights(target, data)) w = std::max(w, x);
  return w;
}

}  // namespace

TEST(Spec, ParseAndLabel) {
  EXPECT_EQ(parse_spec("IPS"), EstimatorSpec::make(EstimatorKind::IPS));
  EXPECT_EQ(parse_spec("dr"), EstimatorSpec::make(EstimatorKind::DR));
  EXPECT_EQ(parse_spec("TruncatedIPS:10"), EstimatorSpec::make(EstimatorKind::TruncatedIPS, 10.0));
  EXPECT_EQ(parse_spec("TruncatedIPS(10)"), EstimatorSpec::make(EstimatorKind::TruncatedIPS, 10.0));
  EXPECT_EQ(parse_spec("SwitchDR=inf"), EstimatorSpec::make(EstimatorKind::SwitchDR, kInf));
  EXPECT_EQ(EstimatorSpec::make(EstimatorKind::TruncatedIPS, 12.5).label(), "TruncatedIPS(12.5)");
  EXPECT_THROW(parse_spec("Bogus"), InvalidInput);
  EXPECT_THROW(EstimatorSpec::make(EstimatorKind::IPS, 1.0), InvalidInput);
  EXPECT_THROW(EstimatorSpec::make(EstimatorKind::TruncatedIPS), InvalidInput);
  EXPECT_THROW(EstimatorSpec::make(EstimatorKind::IPSLambda, 1.5), InvalidInput);
  EXPECT_THROW(EstimatorSpec::make(EstimatorKind::GroupIPS, 2.5), InvalidInput);
  EXPECT_THROW(EstimatorSpec::make(EstimatorKind::GroupIPS, 0.0), InvalidInput);
}

TEST(Ips, Examples) {
  const auto target = fixed_probs({0.5, 0.5});
  const LoggedDataset data(1, 2, std::vector<LoggedSample>{{kOne, 0, 1.0, 0.25}, {kOne, 1, 0.0, 1.0}});
  const auto res = estimate(EstimatorSpec::make(EstimatorKind::IPS), data, target);
  EXPECT_DOUBLE_EQ(res.estimate, 1.0);
  // (1/n^2) * sum (v - mean)^2 = (1 + 1) / 4.
  EXPECT_DOUBLE_EQ(res.variance_of_mean, 0.5);
  EXPECT_DOUBLE_EQ(res.contributions.values[0], 2.0);
  EXPECT_DOUBLE_EQ(res.contributions.values[1], 0.0);

  auto rng = make_rng({1});
  const auto logging = random_policy(rng, 3, 2, 1.0);
  const auto logged = random_logged(rng, 30, logging);
  const auto same = ips_contributions(logged, logging);
  for (std::size_t i = 0; i < logged.n(); ++i) EXPECT_NEAR(same.values[i], logged.reward(i), 1e-12);
}

TEST(Dm, Examples) {
  const auto target = SoftmaxLinearPolicy::uniform(2, 1);
  const LoggedDataset data(1, 2, std::vector<LoggedSample>{{{0.0}, 0, 1.0, 0.5}, {{1.0}, 1, 0.0, 0.5}});
  // action 0: 0.2 + 0.2x, action 1: 0.6 + 0.2x
  const auto model = RewardModel::from_coefficients(1, 2, {0.2, 0.2, 0.2, 0.6});
  EXPECT_NEAR(mean(dm_contributions(data, target, model)), 0.5, 1e-15);
  const auto zero = estimate_with_model(EstimatorSpec::make(EstimatorKind::DM), data, target,
                                        RewardModel::zero(1, 2));
  EXPECT_EQ(zero.estimate, 0.0);
  EXPECT_EQ(zero.variance_of_mean, 0.0);
}

TEST(Dm, PerfectModelRecoversValueExactly) {
  // Deterministic rewards r = f(x, a) for an affine f within [0, 1].
  auto rng = make_rng({2});
  const auto logging = random_policy(rng, 3, 2, 1.0);
  const auto target = random_policy(rng, 3, 2, 2.0);
  const auto truth = RewardModel::from_coefficients(2, 3, {0.1, 0.2, 0.5, -0.1, 0.1, 0.4, 0.2, 0.0, 0.3});
  auto logged = random_logged(rng, 50, logging);
  std::vector<double> rewards(logged.n());
  for (std::size_t i = 0; i < logged.n(); ++i) {
    rewards[i] = truth.predict(logged.context(i), static_cast<std::size_t>(logged.action(i)));
  }
  const LoggedDataset data(2, 3, logged.contexts(), logged.actions(), rewards, logged.logging_propensities());
  double value = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i) value += expected_reward(truth, target, data.context(i));
  value /= static_cast<double>(data.n());
  EXPECT_NEAR(mean(dm_contributions(data, target, truth)), value, 1e-15);
  // Residuals vanish, so DR matches DM.
  expect_same(dr_contributions(data, target, truth), dm_contributions(data, target, truth), 1e-15);
}

TEST(Dr, Examples) {
  const auto target = fixed_probs({0.5, 0.5});
  const LoggedDataset data(1, 2, std::vector<LoggedSample>{{kOne, 0, 1.0, 0.25}});
  // f(x, 0) = 0.5, f(x, 1) = 0.7, DM term 0.6.
  const auto model = RewardModel::from_coefficients(1, 2, {0.0, 0.5, 0.0, 0.7});
  EXPECT_NEAR(dr_contributions(data, target, model).values[0], 1.6, 1e-15);

  auto rng = make_rng({3});
  const auto logging = random_policy(rng, 3, 2, 1.0);
  const auto logged = random_logged(rng, 30, logging);
  const auto t2 = random_policy(rng, 3, 2, 1.0);
  expect_same(dr_contributions(logged, t2, RewardModel::zero(2, 3)), ips_contributions(logged, t2), 0.0);
}

TEST(TruncatedIps, Examples) {
  const auto target = fixed_probs({0.5, 0.5});
  const LoggedDataset data(1, 2, std::vector<LoggedSample>{{kOne, 0, 1.0, 0.5}, {kOne, 1, 1.0, 1.0 / 6.0}});
  EXPECT_NEAR(mean(truncated_ips_contributions(data, target, 2.0)), 1.5, 1e-15);
  EXPECT_NEAR(mean(truncated_ips_contributions(data, target, 1e-300)), 0.0, 1e-290);
  expect_same(truncated_ips_contributions(data, target, 3.0 + 1e-9), ips_contributions(data, target), 1e-12);
}

TEST(SwitchDr, Examples) {
  const auto target = fixed_probs({0.5, 0.5});
  const LoggedDataset data(1, 2, std::vector<LoggedSample>{{kOne, 0, 1.0, 0.5}, {kOne, 1, 1.0, 0.1}});
  const auto model = RewardModel::from_coefficients(1, 2, {0.0, 0.3, 0.0, 0.6});
  const auto v = switch_dr_contributions(data, target, model, 2.0);
  const double dm = 0.5 * 0.3 + 0.5 * 0.6;
  EXPECT_NEAR(v.values[0], 1.0 * (1.0 - 0.3) + dm, 1e-15);
  EXPECT_NEAR(v.values[1], dm, 1e-15);
  // Inclusive threshold: w = tau keeps the residual.
  EXPECT_NEAR(switch_dr_contributions(data, target, model, 1.0).values[0], 0.7 + dm, 1e-15);
}

TEST(Cab, Examples) {
  const auto target = fixed_probs({1.0, 0.0});
  const auto logging = fixed_probs({0.25, 0.75});
  const LoggedDataset data(1, 2, std::vector<LoggedSample>{{kOne, 0, 1.0, 0.25}});
  const auto model = RewardModel::from_coefficients(1, 2, {0.0, 0.5, 0.0, 0.9});
  EXPECT_NEAR(cab_contributions(data, target, logging, model, 2.0).values[0], 2.25, 1e-12);

  auto rng = make_rng({4});
  const auto lp = random_policy(rng, 3, 2, 1.0);
  const auto tp = random_policy(rng, 3, 2, 2.0);
  const auto logged = random_logged(rng, 40, lp);
  const auto m = fit_ridge(logged);
  expect_same(cab_contributions(logged, tp, lp, m, 0.0), dm_contributions(logged, tp, m), 1e-12);
  // M above every w(x_i, a) switches the DM part off entirely.
  double wmax = 0.0;
  for (std::size_t i = 0; i < logged.n(); ++i) {
    const auto pt = tp.action_probs(logged.context(i));
    const auto pl = lp.action_probs(logged.context(i));
    for (std::size_t a = 0; a < 3; ++a) wmax = std::max(wmax, pt[a] / pl[a]);
  }
  expect_same(cab_contributions(logged, tp, lp, m, wmax * 1.01), ips_contributions(logged, tp), 1e-12);
}

TEST(DrShrink, Examples) {
  EXPECT_DOUBLE_EQ(shrink_weight(2.0, 4.0, ShrinkMode::Optimistic), 1.0);
  EXPECT_EQ(shrink_weight(2.0, 0.0, ShrinkMode::Optimistic), 0.0);
  EXPECT_EQ(shrink_weight(2.0, 0.0, ShrinkMode::Pessimistic), 0.0);
  EXPECT_EQ(shrink_weight(2.0, 1.5, ShrinkMode::Pessimistic), 1.5);

  auto rng = make_rng({5});
  const auto lp = random_policy(rng, 3, 2, 1.0);
  const auto tp = random_policy(rng, 3, 2, 2.0);
  const auto logged = random_logged(rng, 40, lp);
  const auto m = fit_ridge(logged);
  const auto dr = dr_contributions(logged, tp, m);
  expect_same(dr_shrink_contributions(logged, tp, m, 1e12, ShrinkMode::Optimistic), dr, 1e-6);
  expect_same(dr_shrink_contributions(logged, tp, m, 1e12, ShrinkMode::Pessimistic), dr, 1e-12);
}

TEST(IpsLambda, Examples) {
  EXPECT_DOUBLE_EQ(ips_lambda_weight(3.0, 0.5), 1.5);
  EXPECT_DOUBLE_EQ(ips_lambda_weight(3.0, 1.0), 1.0);
  auto rng = make_rng({6});
  const auto lp = random_policy(rng, 3, 2, 1.0);
  const auto tp = random_policy(rng, 3, 2, 2.0);
  const auto logged = random_logged(rng, 40, lp);
  EXPECT_NEAR(mean(ips_lambda_contributions(logged, tp, 1.0)), logged.mean_reward(), 1e-12);
}

TEST(ClusterMap, BinsAndMarginals) {
  EXPECT_EQ(ClusterMap::bin(0.7, 1), 0u);
  EXPECT_EQ(ClusterMap::bin(0.3, 4), 1u);
  EXPECT_EQ(ClusterMap::bin(1.0, 4), 3u);
  EXPECT_EQ(ClusterMap::bin(0.0, 4), 0u);

  auto rng = make_rng({7});
  const auto lp = random_policy(rng, 4, 2, 1.0);
  const auto tp = random_policy(rng, 4, 2, 3.0);
  const auto logged = random_logged(rng, 40, lp);
  const auto map = build_cluster_map(fit_ridge(logged), 8);
  for (std::size_t i = 0; i < logged.n(); ++i) {
    for (const auto* p : {&lp, &tp}) {
      const auto g = map.marginals(*p, logged.context(i));
      double total = 0.0;
      for (double v : g) total += v;
      ASSERT_NEAR(total, 1.0, 1e-12);
    }
  }
}

TEST(GroupIps, Examples) {
  auto rng = make_rng({8});
  const auto lp = random_policy(rng, 3, 2, 1.0);
  const auto tp = random_policy(rng, 3, 2, 2.0);
  const auto logged = random_logged(rng, 40, lp);
  const auto model = fit_ridge(logged);
  EXPECT_NEAR(mean(group_ips_contributions(logged, tp, lp, build_cluster_map(model, 1))),
              logged.mean_reward(), 1e-12);
  const auto same = group_ips_contributions(logged, lp, lp, build_cluster_map(model, 4));
  for (std::size_t i = 0; i < logged.n(); ++i) EXPECT_NEAR(same.values[i], logged.reward(i), 1e-12);

  // Constant predictions 0.15, 0.55, 0.95 put every action in its own cluster.
  const auto distinct = RewardModel::from_coefficients(2, 3, {0, 0, 0.15, 0, 0, 0.55, 0, 0, 0.95});
  expect_same(group_ips_contributions(logged, tp, lp, build_cluster_map(distinct, 10)),
              ips_contributions(logged, tp), 1e-12);
}

TEST(Estimate, DispatchExamples) {
  auto rng = make_rng({9});
  const auto lp = random_policy(rng, 3, 2, 1.0);
  const auto tp = random_policy(rng, 3, 2, 2.0);
  const auto logged = random_logged(rng, 40, lp);
  const auto ips = estimate(EstimatorSpec::make(EstimatorKind::IPS), logged, tp);
  const auto inf = estimate(EstimatorSpec::make(EstimatorKind::TruncatedIPS, kInf), logged, tp);
  EXPECT_EQ(ips.estimate, inf.estimate);
  EXPECT_EQ(ips.variance_of_mean, inf.variance_of_mean);
  EXPECT_THROW(estimate(EstimatorSpec::make(EstimatorKind::GroupIPS, 4.0), logged, tp), InvalidInput);
  EXPECT_NO_THROW(estimate(EstimatorSpec::make(EstimatorKind::GroupIPS, 4.0), logged, tp, {&lp}));
}

TEST(Reductions, HoldOnRandomSmallDatasets) {
  auto rng = make_rng({10});
  for (int t = 0; t < 100; ++t) {
    const std::size_t m = 2 + uniform_index(rng, 4);
    const std::size_t d = 1 + uniform_index(rng, 3);
    const std::size_t n = 5 + uniform_index(rng, 46);
    const auto lp = random_policy(rng, m, d, uniform(rng, -2.0, 2.0));
    const auto tp = random_policy(rng, m, d, uniform(rng, -3.0, 3.0));
    const auto data = random_logged(rng, n, lp, t % 2 == 0);
    const auto model = fit_ridge(data);
    const double wmax = max_weight(data, tp);
    const auto ips = ips_contributions(data, tp);
    const auto dm = dm_contributions(data, tp, model);
    const auto dr = dr_contributions(data, tp, model);
    expect_same(truncated_ips_contributions(data, tp, wmax), ips, 1e-12);
    expect_same(switch_dr_contributions(data, tp, model, 0.0), dm, 1e-12);
    expect_same(switch_dr_contributions(data, tp, model, wmax), dr, 1e-12);
    expect_same(cab_contributions(data, tp, lp, model, 0.0), dm, 1e-12);
    expect_same(dr_shrink_contributions(data, tp, model, 0.0, ShrinkMode::Optimistic), dm, 1e-12);
    expect_same(dr_shrink_contributions(data, tp, model, 0.0, ShrinkMode::Pessimistic), dm, 1e-12);
    expect_same(dr_shrink_contributions(data, tp, model, wmax, ShrinkMode::Pessimistic), dr, 1e-12);
    expect_same(ips_lambda_contributions(data, tp, 0.0), ips, 1e-12);
    EXPECT_NEAR(mean(group_ips_contributions(data, tp, lp, build_cluster_map(model, 1))),
                data.mean_reward(), 1e-12);
  }
}

TEST(Monotonicity, TruncationAndPessimisticShrinkage) {
  auto rng = make_rng({11});
  const auto lp = random_policy(rng, 4, 2, 1.0);
  const auto tp = random_policy(rng, 4, 2, 4.0);
  const auto data = random_logged(rng, 80, lp);
  double prev = -1.0;
  for (double M = 0.05; M < 50.0; M *= 1.3) {
    const double v = mean(truncated_ips_contributions(data, tp, M));
    ASSERT_GE(v, prev);
    prev = v;
  }
  for (double w : {0.0, 0.3, 1.0, 7.0}) {
    double last = -1.0;
    for (double lambda = 0.0; lambda < 10.0; lambda += 0.25) {
      const double s = shrink_weight(w, lambda, ShrinkMode::Pessimistic);
      ASSERT_GE(s, last);
      last = s;
    }
  }
}

TEST(Statistical, IpsAndDrUnbiasedDrLowerVariance) {
  const auto bandit = DiscreteBandit::standard();
  const auto lp = bandit.logging_policy();
  const auto tp = bandit.target_policy();
  const double truth = bandit.value(tp);
  // Fixed model from an independent logged sample.
  auto model_rng = make_rng({12, 0});
  const auto model = fit_ridge(bandit.generate(4000, lp, model_rng));

  constexpr int kReps = 10000;
  std::vector<double> ips(kReps);
  std::vector<double> dr(kReps);
  auto rng = make_rng({12, 1});
  for (int r = 0; r < kReps; ++r) {
    const auto data = bandit.generate(50, lp, rng);
    ips[r] = mean(ips_contributions(data, tp));
    dr[r] = mean(dr_contributions(data, tp, model));
  }
  const auto ips_mv = mean_and_variance(ips);
  const auto dr_mv = mean_and_variance(dr);
  EXPECT_LT(std::abs(ips_mv.estimate - truth), 3.0 * std::sqrt(ips_mv.variance_of_mean));
  EXPECT_LT(std::abs(dr_mv.estimate - truth), 3.0 * std::sqrt(dr_mv.variance_of_mean));
  EXPECT_LE(dr_mv.variance_of_mean, ips_mv.variance_of_mean);
}

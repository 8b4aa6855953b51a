#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "opecv/error.hpp"
#include "opecv/reward_model.hpp"
#include "test_support.hpp"

using namespace opecv;
using opecv::testing::random_logged;
using opecv::testing::random_policy;
using opecv::testing::uniform;

namespace {

// sum over rows with action a of (r - z^T theta)^2 + lambda |theta|^2, z = [x, 1]
double ridge_objective(const LoggedDataset& data, std::size_t a, std::span<const double> theta,
                       double lambda) {
  double total = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    if (static_cast<std::size_t>(data.action(i)) != a) continue;
    const auto x = data.context(i);
    double pred = theta[data.d()];
    for (std::size_t j = 0; j < data.d(); ++j) pred += theta[j] * x[j];
    total += (data.reward(i) - pred) * (data.reward(i) - pred);
  }
  for (double t : theta) total += lambda * t * t;
  return total;
}

}  // namespace

TEST(RewardModel, OneDimensionalClosedForm) {
  const std::vector<LoggedSample> s{{{1.0}, 0, 1.0, 1.0}, {{1.0}, 0, 0.0, 1.0}};
  const LoggedDataset data(1, 1, s);
  RidgeOptions options;
  options.regularization = 0.001;
  options.fit_intercept = false;
  const auto model = fit_ridge(data, options);
  EXPECT_NEAR(model.coefficients(0)[0], 1.0 / 2.001, 1e-14);
  EXPECT_EQ(model.coefficients(0)[1], 0.0);
}

TEST(RewardModel, HugePenaltyShrinksToZero) {
  auto rng = make_rng({1});
  const auto logging = random_policy(rng, 3, 2, 1.0);
  const auto data = random_logged(rng, 60, logging);
  const auto model = fit_ridge(data, 1e12);
  for (std::size_t a = 0; a < 3; ++a) {
    if (!model.fitted(a)) continue;
    for (double c : model.coefficients(a)) EXPECT_NEAR(c, 0.0, 1e-9);
    EXPECT_NEAR(model.predict_raw(data.context(0), a), 0.0, 1e-9);
  }
}

TEST(RewardModel, DuplicatedDataGivesSameWeights) {
  auto rng = make_rng({2});
  const auto logging = random_policy(rng, 2, 3, 0.5);
  const auto data = random_logged(rng, 40, logging);
  std::vector<std::size_t> twice;
  for (std::size_t i = 0; i < data.n(); ++i) {
    twice.push_back(i);
    twice.push_back(i);
  }
  const auto a = fit_ridge(data, 1e-10);
  const auto b = fit_ridge(data.subset(twice), 1e-10);
  for (std::size_t act = 0; act < 2; ++act) {
    for (std::size_t j = 0; j <= 3; ++j) {
      EXPECT_NEAR(a.coefficients(act)[j], b.coefficients(act)[j], 1e-6);
    }
  }
}

TEST(RewardModel, PredictExamples) {
  const auto zero = RewardModel::zero(1, 2);
  EXPECT_EQ(zero.predict(std::vector<double>{0.7}, 1), 0.0);
  const auto unit = RewardModel::from_coefficients(1, 1, {1.0, 0.0});
  EXPECT_DOUBLE_EQ(unit.predict(std::vector<double>{0.3}, 0), 0.3);
  EXPECT_DOUBLE_EQ(unit.predict_raw(std::vector<double>{1.7}, 0), 1.7);
  EXPECT_EQ(unit.predict(std::vector<double>{1.7}, 0), 1.0);
  EXPECT_EQ(unit.predict(std::vector<double>{-0.4}, 0), 0.0);
  EXPECT_THROW(predict(unit, std::vector<double>{0.3}, 1), InvalidInput);
  EXPECT_THROW(predict(unit, std::vector<double>{0.3}, -1), InvalidInput);
}

TEST(RewardModel, UnseenActionPredictsMeanReward) {
  const std::vector<LoggedSample> s{{{0.1}, 0, 1.0, 0.5}, {{0.9}, 0, 0.0, 0.5}, {{0.5}, 1, 1.0, 0.5}};
  const LoggedDataset data(1, 3, s);
  const auto model = fit_ridge(data);
  EXPECT_FALSE(model.fitted(2));
  EXPECT_DOUBLE_EQ(model.predict(std::vector<double>{0.3}, 2), 2.0 / 3.0);
}

TEST(RewardModel, ExpectedRewardExamples) {
  // Predictions (0, 1): intercepts 0 and 1.
  const auto model = RewardModel::from_coefficients(1, 2, {0.0, 0.0, 0.0, 1.0});
  const auto uniform2 = SoftmaxLinearPolicy::uniform(2, 1);
  EXPECT_DOUBLE_EQ(expected_reward(model, uniform2, std::vector<double>{0.5}), 0.5);

  const SoftmaxLinearPolicy hard({{0.0}, {1.0}}, 1000.0);
  EXPECT_DOUBLE_EQ(expected_reward(model, hard, std::vector<double>{1.0}), 1.0);

  // pi = (0.25, 0.75) via logit difference log 3; predictions (0.4, 0.8).
  const SoftmaxLinearPolicy p({{0.0}, {std::log(3.0)}}, 1.0);
  const auto m2 = RewardModel::from_coefficients(1, 2, {0.0, 0.4, 0.0, 0.8});
  EXPECT_NEAR(expected_reward(m2, p, std::vector<double>{1.0}), 0.7, 1e-15);
}

TEST(RewardModel, FittedWeightsBeatRandomPerturbations) {
  auto rng = make_rng({3});
  for (int t = 0; t < 30; ++t) {
    const std::size_t d = 1 + uniform_index(rng, 4);
    const std::size_t n = 5 + uniform_index(rng, 16);
    const auto logging = random_policy(rng, 2, d, 1.0);
    const auto data = random_logged(rng, n, logging);
    const double lambda = 1e-3;
    const auto model = fit_ridge(data, lambda);
    for (std::size_t a = 0; a < 2; ++a) {
      if (!model.fitted(a)) continue;
      const std::vector<double> theta(model.coefficients(a).begin(), model.coefficients(a).end());
      const double best = ridge_objective(data, a, theta, lambda);
      for (int k = 0; k < 100; ++k) {
        auto perturbed = theta;
        for (auto& v : perturbed) v += uniform(rng, -0.1, 0.1);
        ASSERT_GE(ridge_objective(data, a, perturbed, lambda), best - 1e-12);
      }
    }
  }
}

TEST(RewardModel, GradientVanishesAtSolution) {
  auto rng = make_rng({4});
  for (int t = 0; t < 20; ++t) {
    const std::size_t d = 1 + uniform_index(rng, 4);
    const auto logging = random_policy(rng, 2, d, 1.0);
    const auto data = random_logged(rng, 20, logging);
    const double lambda = 1e-3;
    const auto model = fit_ridge(data, lambda);
    for (std::size_t a = 0; a < 2; ++a) {
      if (!model.fitted(a)) continue;
      std::vector<double> theta(model.coefficients(a).begin(), model.coefficients(a).end());
      for (std::size_t j = 0; j < theta.size(); ++j) {
        // Analytic gradient component.
        double g = 2.0 * lambda * theta[j];
        for (std::size_t i = 0; i < data.n(); ++i) {
          if (static_cast<std::size_t>(data.action(i)) != a) continue;
          const auto x = data.context(i);
          double pred = theta[d];
          for (std::size_t k = 0; k < d; ++k) pred += theta[k] * x[k];
          const double zj = j < d ? x[j] : 1.0;
          g -= 2.0 * (data.reward(i) - pred) * zj;
        }
        ASSERT_LT(std::abs(g), 1e-8);
        // Central finite difference of the objective.
        const double h = 1e-5;
        auto plus = theta;
        auto minus = theta;
        plus[j] += h;
        minus[j] -= h;
        const double fd = (ridge_objective(data, a, plus, lambda) - ridge_objective(data, a, minus, lambda)) / (2 * h);
        ASSERT_LT(std::abs(fd), 1e-6);
      }
    }
  }
}

TEST(RewardModel, ExpectedRewardIsConvexCombination) {
  auto rng = make_rng({5});
  for (int t = 0; t < 200; ++t) {
    const auto logging = random_policy(rng, 4, 3, 1.0);
    const auto data = random_logged(rng, 30, logging);
    const auto model = fit_ridge(data);
    const auto target = random_policy(rng, 4, 3, uniform(rng, -5.0, 5.0));
    const auto x = data.context(0);
    std::vector<double> preds(4);
    model.predict_all(x, preds);
    const double er = expected_reward(model, target, x);
    ASSERT_GE(er, *std::min_element(preds.begin(), preds.end()) - 1e-12);
    ASSERT_LE(er, *std::max_element(preds.begin(), preds.end()) + 1e-12);
  }
}

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "opecv/dataset.hpp"
#include "opecv/error.hpp"
#include "opecv/policy.hpp"
#include "opecv/random.hpp"
#include "opecv/serialization.hpp"
#include "opecv/stats.hpp"
#include "test_support.hpp"

using namespace opecv;
using opecv::testing::random_logged;
using opecv::testing::random_policy;

namespace {

LoggedDataset tiny(std::size_t n) {
  std::vector<LoggedSample> s;
  for (std::size_t i = 0; i < n; ++i) {
    s.push_back({{static_cast<double>(i)}, static_cast<int>(i % 2), 0.5, 0.5});
  }
  return LoggedDataset(1, 2, s);
}

}  // namespace

TEST(Random, DeriveSeedIsOrderSensitiveAndStable) {
  EXPECT_EQ(derive_seed({1, 2, 3}), derive_seed({1, 2, 3}));
  EXPECT_NE(derive_seed({1, 2, 3}), derive_seed({3, 2, 1}));
  EXPECT_NE(derive_seed({1, 2}), derive_seed({1, 2, 0}));
  EXPECT_EQ(hash_real(0.0), hash_real(-0.0));
  EXPECT_NE(hash_real(1.0), hash_real(-1.0));
}

TEST(Random, UniformIndexInRange) {
  auto rng = make_rng({5});
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const auto k = uniform_index(rng, 7);
    ASSERT_LT(k, 7u);
    ++counts[k];
  }
  for (int c : counts) EXPECT_GT(c, 800);
  EXPECT_THROW(uniform_index(rng, 0), InvalidInput);
}

TEST(Dataset, ValidatesSamples) {
  EXPECT_THROW(LoggedDataset(1, 2, std::vector<LoggedSample>{{{0.0}, 2, 0.5, 0.5}}), InvalidInput);
  EXPECT_THROW(LoggedDataset(1, 2, std::vector<LoggedSample>{{{0.0}, 0, 1.5, 0.5}}), InvalidInput);
  EXPECT_THROW(LoggedDataset(1, 2, std::vector<LoggedSample>{{{0.0}, 0, 0.5, 0.0}}), InvalidInput);
  EXPECT_THROW(LoggedDataset(2, 2, std::vector<LoggedSample>{{{0.0}, 0, 0.5, 0.5}}), InvalidInput);
  EXPECT_NO_THROW(LoggedDataset(1, 2, std::vector<LoggedSample>{{{0.0}, 1, 1.0, 1.0}}));
}

TEST(Dataset, TrainSizeRoundsHalfUpAndClamps) {
  EXPECT_EQ(train_size(10, 0.75), 8u);
  EXPECT_EQ(train_size(100, 0.75), 75u);
  EXPECT_EQ(train_size(10, 0.01), 1u);
  EXPECT_EQ(train_size(10, 0.99), 9u);
  EXPECT_EQ(train_size(2, 0.5), 1u);
  EXPECT_THROW(train_size(1, 0.5), InvalidInput);
  EXPECT_THROW(train_size(10, 1.0), InvalidInput);
}

TEST(Dataset, McSplitSizesAndDeterminism) {
  const auto data = tiny(10);
  auto r1 = make_rng({1});
  auto r2 = make_rng({1});
  const auto a = mc_split(data, 0.75, r1);
  const auto b = mc_split(data, 0.75, r2);
  EXPECT_EQ(a.train.n(), 8u);
  EXPECT_EQ(a.validation.n(), 2u);
  EXPECT_EQ(a.train_indices, b.train_indices);
  EXPECT_EQ(a.validation_indices, b.validation_indices);
  EXPECT_THROW(mc_split(tiny(1), 0.5, r1), InvalidInput);
}

TEST(Dataset, McSplitPartitionsForManySeeds) {
  const auto data = tiny(37);
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    auto rng = make_rng({seed});
    const double f = 0.1 + 0.8 * static_cast<double>(seed % 9) / 8.0;
    const auto s = mc_split(data, f, rng);
    ASSERT_EQ(s.train.n() + s.validation.n(), data.n());
    std::vector<std::size_t> all = s.train_indices;
    all.insert(all.end(), s.validation_indices.begin(), s.validation_indices.end());
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> expected(data.n());
    std::iota(expected.begin(), expected.end(), 0);
    ASSERT_EQ(all, expected) << "seed " << seed;
    for (std::size_t k = 0; k < s.train.n(); ++k) {
      ASSERT_EQ(s.train.context(k)[0], data.context(s.train_indices[k])[0]);
    }
  }
}

TEST(Policy, SoftmaxTwoActionExample) {
  SoftmaxLinearPolicy p({{1.0}, {0.0}}, 1.0);
  const auto probs = p.action_probs(std::vector<double>{1.0});
  const double e = std::exp(1.0);
  EXPECT_NEAR(probs[0], e / (e + 1.0), 1e-15);
  EXPECT_NEAR(probs[1], 1.0 / (e + 1.0), 1e-15);
}

TEST(Policy, ZeroTemperatureIsExactlyUniform) {
  auto rng = make_rng({2});
  const auto p = random_policy(rng, 7, 3, 0.0);
  const auto probs = p.action_probs(std::vector<double>{5.0, -3.0, 100.0});
  for (double v : probs) EXPECT_EQ(v, 1.0 / 7.0);
}

TEST(Policy, NegativeTemperaturePrefersLowestLogit) {
  SoftmaxLinearPolicy p({{0.5}, {-2.0}, {1.0}}, -10.0);
  const auto probs = p.action_probs(std::vector<double>{1.0});
  EXPECT_EQ(std::max_element(probs.begin(), probs.end()) - probs.begin(), 1);
}

TEST(Policy, DimensionMismatchThrows) {
  SoftmaxLinearPolicy p({{0.5, 1.0}, {-2.0, 0.0}}, 1.0);
  EXPECT_THROW(p.action_probs(std::vector<double>{1.0}), InvalidInput);
}

TEST(Policy, SimplexAndShiftInvarianceOnRandomInputs) {
  auto rng = make_rng({3});
  for (int t = 0; t < 500; ++t) {
    std::vector<double> logits(1 + uniform_index(rng, 8));
    for (auto& l : logits) l = opecv::testing::uniform(rng, -50.0, 50.0);
    const auto p = softmax(logits);
    double total = 0.0;
    for (double v : p) {
      ASSERT_GT(v, 0.0);
      total += v;
    }
    ASSERT_NEAR(total, 1.0, 1e-12);
    auto shifted = logits;
    const double c = opecv::testing::uniform(rng, -100.0, 100.0);
    for (auto& l : shifted) l += c;
    const auto q = softmax(shifted);
    for (std::size_t a = 0; a < p.size(); ++a) ASSERT_NEAR(p[a], q[a], 1e-12);
  }
}

TEST(Policy, PropensityWeightExamples) {
  SoftmaxLinearPolicy uniform2({{0.0}, {0.0}}, 0.0);
  EXPECT_DOUBLE_EQ(propensity_weight(uniform2, LoggedSample{{1.0}, 0, 1.0, 0.5}), 1.0);
  // pi(a|x) = 0.8 for action 0: logit difference log 4.
  SoftmaxLinearPolicy p({{std::log(4.0)}, {0.0}}, 1.0);
  EXPECT_NEAR(propensity_weight(p, LoggedSample{{1.0}, 0, 1.0, 0.2}), 4.0, 1e-12);
  EXPECT_THROW(propensity_weight(p, LoggedSample{{1.0}, 0, 1.0, 0.0}), InvalidInput);
  // A target that puts (numerically) zero mass on action 1.
  SoftmaxLinearPolicy hard({{1.0}, {0.0}}, 2000.0);
  EXPECT_EQ(propensity_weight(hard, LoggedSample{{1.0}, 1, 1.0, 0.5}), 0.0);
}

TEST(Stats, MeanAndVarianceExamples) {
  const auto mv = mean_and_variance(std::vector<double>{0.0, 1.0});
  EXPECT_DOUBLE_EQ(mv.estimate, 0.5);
  EXPECT_DOUBLE_EQ(mv.variance_of_mean, 0.125);
  const auto c = mean_and_variance(std::vector<double>{0.3, 0.3, 0.3});
  EXPECT_DOUBLE_EQ(c.estimate, 0.3);
  EXPECT_DOUBLE_EQ(c.variance_of_mean, 0.0);
  EXPECT_THROW(mean_and_variance(std::vector<double>{}), InvalidInput);
}

TEST(Stats, VarianceMatchesBruteForceResampling) {
  // Enumerate all 27 with-replacement resamples of a 3-vector; the population
  // variance of their means equals population variance of v divided by n.
  const std::vector<double> v{0.2, 1.5, -0.7};
  std::vector<double> means;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      for (int k = 0; k < 3; ++k) means.push_back((v[i] + v[j] + v[k]) / 3.0);
    }
  }
  double m = 0.0;
  for (double x : means) m += x;
  m /= static_cast<double>(means.size());
  double var = 0.0;
  for (double x : means) var += (x - m) * (x - m);
  var /= static_cast<double>(means.size());
  EXPECT_NEAR(mean_and_variance(v).variance_of_mean, var, 1e-14);
}

TEST(Stats, ScalingProperty) {
  auto rng = make_rng({4});
  for (int t = 0; t < 100; ++t) {
    std::vector<double> v(2 + uniform_index(rng, 30));
    for (auto& x : v) x = opecv::testing::uniform(rng, -3.0, 3.0);
    const double c = opecv::testing::uniform(rng, -5.0, 5.0);
    auto scaled = v;
    for (auto& x : scaled) x *= c;
    const auto a = mean_and_variance(v);
    const auto b = mean_and_variance(scaled);
    ASSERT_NEAR(b.estimate, c * a.estimate, 1e-12);
    ASSERT_NEAR(b.variance_of_mean, c * c * a.variance_of_mean, 1e-12);
  }
}

TEST(Stats, InterpolatedQuantile) {
  const std::vector<double> s{1.0, 2.0, 3.0, 4.0};
  EXPECT_DOUBLE_EQ(interpolated_quantile(s, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(interpolated_quantile(s, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(interpolated_quantile(s, 0.5), 2.5);
}

TEST(Serialization, DatasetRoundTrip) {
  auto rng = make_rng({6});
  const auto policy = random_policy(rng, 3, 2, 1.0);
  const auto data = random_logged(rng, 20, policy);
  const auto back = dataset_from_json(dataset_to_json(data));
  EXPECT_EQ(back.n(), data.n());
  EXPECT_EQ(back.contexts(), data.contexts());
  EXPECT_EQ(back.actions(), data.actions());
  EXPECT_EQ(back.rewards(), data.rewards());
  EXPECT_EQ(back.logging_propensities(), data.logging_propensities());
  EXPECT_THROW(dataset_from_json("{\"n\": 1}"), InvalidInput);
  EXPECT_THROW(dataset_from_json("not json"), InvalidInput);
}

TEST(Serialization, SpecRoundTripAndFormatting) {
  for (const auto& spec : {EstimatorSpec::make(EstimatorKind::DR),
                           EstimatorSpec::make(EstimatorKind::TruncatedIPS, 12.5),
                           EstimatorSpec::make(EstimatorKind::SwitchDR, INFINITY)}) {
    EXPECT_EQ(spec_from_json(spec_to_json(spec)), spec);
  }
  EXPECT_EQ(format_real(0.1), "0.1");
  EXPECT_EQ(format_real(3.0), "3");
  EXPECT_EQ(format_real(-0.0), "0");
  EXPECT_EQ(format_real(INFINITY), "inf");
}

TEST(Determinism, SameSeedSameStream) {
  auto a = make_rng({9, 1});
  auto b = make_rng({9, 1});
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a(), b());
}

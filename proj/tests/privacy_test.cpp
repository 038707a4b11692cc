#include "dpmarket/privacy.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dpmarket/errors.hpp"
#include "support/oracles.hpp"

namespace dpmarket {
namespace {

using testing::moments;

Database ratings(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> rating(0, 5);
  std::vector<double> items(2000);
  for (double& r : items) r = rating(rng);
  return Database(items, 5.0);
}

LinearQuery sum_query() {
  std::vector<double> q(2000, 0.0);
  for (std::size_t i = 0; i < q.size(); i += 2) q[i] = 1.0;
  return LinearQuery(q);
}

TEST(PrivacyTest, ExactAnswerAtZeroVariance) {
  const Database x = ratings(1);
  NoiseSource noise(3);
  const PricedQuery q(sum_query(), 0.0);
  EXPECT_EQ(answer(q, x, noise), evaluate(q.query, x));
  EXPECT_EQ(noise.next_draw(), 1u);
}

TEST(PrivacyTest, InfiniteVarianceCannotBeAnswered) {
  NoiseSource noise(3);
  EXPECT_THROW(answer(PricedQuery(LinearQuery({1.0}), kInfinity), Database({1.0}, 1.0), noise), ValidationError);
}

TEST(PrivacyTest, NoiseScaleMatchesVariance) {
  EXPECT_DOUBLE_EQ(NoiseSpec::for_variance(5000.0).scale, 50.0);
  EXPECT_EQ(NoiseSpec::for_variance(0.0).scale, 0.0);
  EXPECT_THROW(NoiseSpec::for_variance(-1.0), ValidationError);
}

TEST(PrivacyTest, SumQueryCalibration) {
  const Database x = ratings(2);
  const PricedQuery q(sum_query(), 5000.0);
  const double truth = evaluate(q.query, x);
  NoiseSource noise(77);
  std::vector<double> answers(100000);
  std::size_t far = 0;
  for (double& a : answers) {
    a = answer(q, x, noise);
    if (std::abs(a - truth) >= 300.0) ++far;
  }
  const auto m = moments(answers);
  EXPECT_LE(std::abs(m.mean - truth), 5.0 * m.standard_error());
  EXPECT_GE(m.variance, 0.95 * 5000.0);
  EXPECT_LE(m.variance, 1.05 * 5000.0);
  EXPECT_LE(static_cast<double>(far) / answers.size(), 0.056);
  EXPECT_LE(static_cast<double>(far) / answers.size(), 1.0 - 0.94);
}

TEST(PrivacyTest, SpreadGrowsWithVariance) {
  const Database x({1.0, 2.0}, 2.0);
  const PricedQuery base(LinearQuery({1.0, 1.0}), 1.0);
  double previous = 0.0;
  NoiseSource noise(11);
  for (double v : {10.0, 100.0, 1000.0}) {
    std::vector<double> draws(100000);
    for (double& d : draws) d = answer(PricedQuery(base.query, v), x, noise);
    const double var = moments(draws).variance;
    EXPECT_NEAR(var, v, 0.05 * v);
    EXPECT_GT(var, previous);
    previous = var;
  }
}

TEST(PrivacyTest, DrawsAreReproducibleFromSeedAndIndex) {
  NoiseSource a(42);
  std::vector<double> first(50);
  for (double& d : first) d = a.laplace(3.0);
  for (std::uint64_t k = 0; k < first.size(); k += 7) {
    NoiseSource replay(42, k);
    EXPECT_EQ(replay.laplace(3.0), first[k]);
    EXPECT_EQ(replay.next_draw(), k + 1);
  }
}

TEST(PrivacyTest, LaplaceQuantileIsSymmetric) {
  EXPECT_EQ(laplace_quantile(0.5, 2.0), 0.0);
  EXPECT_NEAR(laplace_quantile(0.25, 2.0), -laplace_quantile(0.75, 2.0), 1e-15);
  EXPECT_NEAR(laplace_quantile(0.25, 2.0), 2.0 * std::log(0.5), 1e-15);
  EXPECT_EQ(laplace_quantile(0.9, 0.0), 0.0);
}

TEST(PrivacyTest, Sensitivity) {
  EXPECT_EQ(sensitivity(LinearQuery({1.0, 0.0}), 0, 5.0), 5.0);
  EXPECT_EQ(sensitivity(LinearQuery({1.0, 0.0}), 1, 5.0), 0.0);
  EXPECT_EQ(sensitivity(LinearQuery({-3.0}), 0, 1.0), 3.0);
  EXPECT_THROW(sensitivity(LinearQuery({1.0}), 1, 1.0), ValidationError);
}

TEST(PrivacyTest, LossBound) {
  const LinearQuery q({1.0, 0.0, -1.0});
  EXPECT_EQ(loss_bound(PricedQuery(q, 5000.0), 0, 5.0), 0.1);
  EXPECT_EQ(loss_bound(PricedQuery(q, 50.0), 2, 5.0), 1.0);
  for (double v : {0.0, 1.0, 5000.0, kInfinity}) EXPECT_EQ(loss_bound(PricedQuery(q, v), 1, 5.0), 0.0);
  EXPECT_TRUE(std::isinf(loss_bound(PricedQuery(q, 0.0), 0, 5.0)));
  EXPECT_EQ(loss_bound(PricedQuery(q, kInfinity), 0, 5.0), 0.0);
  EXPECT_THROW(loss_bound(PricedQuery(q, 1.0), 3, 5.0), ValidationError);
}

TEST(PrivacyTest, ComposeLoss) {
  EXPECT_NEAR(compose_loss(std::vector<double>{0.5, 0.5}, std::vector<double>{0.1, 0.1}), 0.1, 1e-17);
  EXPECT_EQ(compose_loss(std::vector<double>{0.0, 0.0}, std::vector<double>{kInfinity, 3.0}), 0.0);
  EXPECT_NEAR(compose_loss(std::vector<double>{1.0, -1.0}, std::vector<double>{0.2, 0.3}), 0.5, 1e-15);
  EXPECT_THROW(compose_loss(std::vector<double>{1.0}, std::vector<double>{0.2, 0.3}), ValidationError);
}

TEST(PrivacyTest, EmpiricalLossWithinBound) {
  // One item in {0, 1}, gamma = 1, v = 2 (b = 1): the bound is 1.
  const PricedQuery q(LinearQuery({1.0}), 2.0);
  const double bound = loss_bound(q, 0, 1.0);
  ASSERT_EQ(bound, 1.0);
  const Database one({1.0}, 1.0);
  const Database zero = zeroed(one, 0);
  NoiseSource noise(2718);
  std::vector<double> with_item(2000000), without_item(2000000);
  for (double& d : with_item) d = answer(q, one, noise);
  for (double& d : without_item) d = answer(q, zero, noise);
  const double worst = testing::max_histogram_log_ratio(with_item, without_item, -12.0, 12.0, 0.25, 1000);
  EXPECT_LE(worst, bound + 0.1);
  EXPECT_GT(worst, 0.5 * bound);
}

}  // namespace
}  // namespace dpmarket

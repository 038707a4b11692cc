#include "dpmarket/fuzz.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "dpmarket/determinacy.hpp"

namespace dpmarket {
namespace {

TEST(FuzzTest, RuleForwardInstancesAreDetermined) {
  std::mt19937_64 rng(14);
  InstanceGenerator generator(5, rng);
  for (int t = 0; t < 3000; ++t) {
    const auto instance = generator.rule_forward();
    EXPECT_TRUE(instance.rule_forward);
    EXPECT_TRUE(determines(instance.bundle, instance.target)) << "trial " << t;
  }
}

TEST(FuzzTest, FilteredInstancesAreDetermined) {
  std::mt19937_64 rng(15);
  InstanceGenerator generator(5, rng);
  std::size_t kept = 0;
  for (int t = 0; t < 3000; ++t) {
    if (auto instance = generator.random_filtered()) {
      ++kept;
      EXPECT_FALSE(instance->rule_forward);
      EXPECT_TRUE(determines(instance->bundle, instance->target));
    }
  }
  EXPECT_GT(kept, 300u);
}

TEST(FuzzTest, VarianceMixture) {
  std::mt19937_64 rng(16);
  InstanceGenerator generator(3, rng);
  std::size_t zeros = 0, infinite = 0;
  for (int t = 0; t < 20000; ++t) {
    const double v = generator.random_variance();
    ASSERT_GE(v, 0.0);
    if (v == 0.0) ++zeros;
    if (std::isinf(v)) ++infinite;
  }
  EXPECT_NEAR(zeros / 20000.0, 0.04, 0.01);
  EXPECT_NEAR(infinite / 20000.0, 0.02, 0.01);
}

TEST(FuzzTest, LeafPoolIsUsed) {
  std::mt19937_64 rng(17);
  InstanceGenerator generator(2, rng);
  const PricedQuery marker(LinearQuery({7.0, 7.0}), 3.0);
  generator.set_leaf_pool({marker});
  std::size_t hits = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto q = generator.random_query();
    if (q.query.coefficients()[0] == 7.0 && q.variance == 3.0) ++hits;
  }
  EXPECT_NEAR(hits / 1000.0, 0.5, 0.06);
}

TEST(FuzzTest, CheckInstance) {
  const QueryBundle bundle{PricedQuery(LinearQuery({1.0}), 2.0), PricedQuery(LinearQuery({1.0}), 2.0)};
  const ArbitrageInstance instance{bundle, PricedQuery(LinearQuery({1.0}), 1.0), true};
  EXPECT_FALSE(check_instance([](const PricedQuery& q) { return 1.0 / q.variance; }, instance));
  const auto violation = check_instance([](const PricedQuery& q) { return 1.0 / (q.variance * q.variance); }, instance);
  ASSERT_TRUE(violation);
  EXPECT_EQ(violation->target_price, 1.0);
  EXPECT_EQ(violation->bundle_price, 0.5);
}

TEST(FuzzTest, ConstantPriceIsFlagged) {
  std::mt19937_64 rng(18);
  InstanceGenerator generator(4, rng);
  const auto report = fuzz_price([](const PricedQuery&) { return 5.0; }, 2000, generator);
  EXPECT_FALSE(report.violations.empty());
  for (const auto& v : report.violations) EXPECT_TRUE(v.instance.bundle.empty());
}

TEST(FuzzTest, ReportCounts) {
  std::mt19937_64 rng(19);
  InstanceGenerator generator(4, rng);
  const PriceFn fns[] = {as_price_fn(PriceExpr::leaf(SemiNorm::l2())), as_price_fn(PriceExpr::leaf(SemiNorm::linf()))};
  const auto reports = fuzz_prices(fns, 1000, generator);
  ASSERT_EQ(reports.size(), 2u);
  for (const auto& r : reports) {
    EXPECT_EQ(r.trials, 1000u);
    EXPECT_EQ(r.rule_forward + r.random_filtered, 1000u);
    EXPECT_GT(r.random_filtered, 300u);
    EXPECT_TRUE(r.violations.empty());
  }
}

}  // namespace
}  // namespace dpmarket

#include "dpmarket/pricing.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "dpmarket/determinacy.hpp"
#include "dpmarket/fuzz.hpp"
#include "support/random_exprs.hpp"

namespace dpmarket {
namespace {

using testing::ExprSampler;
using testing::ExprSamplerOptions;

// 1000 voters rating two candidates; the query sums candidate A's ratings.
LinearQuery sum_query() {
  std::vector<double> q(2000, 0.0);
  for (std::size_t i = 0; i < q.size(); i += 2) q[i] = 1.0;
  return LinearQuery(q);
}

double atan_reference(double p, double c, double norm_sq, double v) {
  return 2.0 * p / std::numbers::pi * std::atan(c * norm_sq / v);
}

TEST(PricingTest, SquaredNormOverVariance) {
  const auto expr = PriceExpr::leaf(SemiNorm::l2());
  EXPECT_NEAR(price(expr, PricedQuery(sum_query(), 5000.0)), 0.2, 1e-15);
}

TEST(PricingTest, BoundedAtanPriceWorkedExample) {
  const auto expr = bounded_atan_price(10000.0, 7.85e-4);
  const double exact = price(expr, PricedQuery(sum_query(), 50.0));
  const double perturbed = price(expr, PricedQuery(sum_query(), 5000.0));
  EXPECT_NEAR(exact, 99.94, 0.01);
  EXPECT_NEAR(perturbed, 1.00, 0.01);
  EXPECT_NEAR(exact, atan_reference(10000.0, 7.85e-4, 1000.0, 50.0), 1e-9);
  EXPECT_NEAR(perturbed, atan_reference(10000.0, 7.85e-4, 1000.0, 5000.0), 1e-12);
  EXPECT_NEAR(price(expr, PricedQuery(sum_query(), 0.0)), 10000.0, 1e-9);
  EXPECT_EQ(price(expr, PricedQuery(sum_query(), kInfinity)), 0.0);
}

TEST(PricingTest, InfiniteAndZeroVarianceLimits) {
  const auto base = PriceExpr::leaf(SemiNorm::l2());
  const LinearQuery q({1.0, 2.0});
  EXPECT_TRUE(std::isinf(price(base, PricedQuery(q, 0.0))));
  EXPECT_EQ(price(base, PricedQuery(q, kInfinity)), 0.0);
  EXPECT_EQ(price(base, PricedQuery(LinearQuery::zero(2), 0.0)), 0.0);
  EXPECT_EQ(price(PriceExpr::cutoff(base, 3.0), PricedQuery(q, 0.0)), 3.0);
  EXPECT_NEAR(price(PriceExpr::atan(base, 2.0), PricedQuery(q, 0.0)), std::numbers::pi, 1e-15);
  EXPECT_EQ(price(PriceExpr::tanh(base, 2.0), PricedQuery(q, 0.0)), 2.0);
  EXPECT_EQ(price(PriceExpr::alg_sigmoid(base, 2.0), PricedQuery(q, 0.0)), 2.0);
  EXPECT_EQ(price(PriceExpr::alg_sigmoid(base, 0.0), PricedQuery(q, 0.0)), 0.0);
  EXPECT_TRUE(std::isinf(price(PriceExpr::log1p(base), PricedQuery(q, 0.0))));

  const auto zero_side = PriceExpr::leaf(SemiNorm::weighted_l2(std::vector<double>{0.0, 1.0}));
  const LinearQuery first_only({1.0, 0.0});
  EXPECT_EQ(price(PriceExpr::geomean(base, zero_side), PricedQuery(first_only, 0.0)), 0.0);
  EXPECT_EQ(price(PriceExpr::linear_comb({{0.0, base}}), PricedQuery(q, 0.0)), 0.0);
}

TEST(PricingTest, ZeroQueryIsFree) {
  std::mt19937_64 rng(3);
  ExprSampler sampler(rng, {});
  for (int trial = 0; trial < 300; ++trial) {
    const auto expr = sampler.expr();
    for (double v : {0.0, 1e-3, 1.0, 1e6, kInfinity}) {
      EXPECT_EQ(price(expr, PricedQuery(LinearQuery::zero(4), v)), 0.0);
    }
  }
}

TEST(PricingTest, ValidateWhitelist) {
  const auto l2 = PriceExpr::leaf(SemiNorm::l2());
  const auto linf = PriceExpr::leaf(SemiNorm::linf());
  EXPECT_FALSE(validate(PriceExpr::power(l2, 1.5)));
  EXPECT_FALSE(validate(PriceExpr::power(l2, 0.0)));
  EXPECT_TRUE(validate(PriceExpr::power(l2, 1.0)));
  EXPECT_TRUE(validate(PriceExpr::max({l2, linf})));
  EXPECT_FALSE(validate(PriceExpr::linear_comb({{1.0, l2}, {-0.5, linf}})));
  EXPECT_FALSE(validate(PriceExpr::cutoff(l2, -1.0)));
  EXPECT_FALSE(validate(PriceExpr::leaf(SemiNorm::lp(0.5))));
  EXPECT_FALSE(validate(PriceExpr::leaf(SemiNorm::weighted_l2(std::vector<double>{1.0, -1.0}))));
  EXPECT_FALSE(validate(PriceExpr::atan(l2, std::nan(""))));
  EXPECT_FALSE(validate(PriceExpr::max({})));
  EXPECT_TRUE(validate(bounded_atan_price(10000.0, 7.85e-4)));
}

TEST(PricingTest, SeminormAxioms) {
  std::mt19937_64 rng(41);
  EXPECT_TRUE(seminorm_axioms_hold(SemiNorm::l2(), 10000, rng));
  EXPECT_TRUE(seminorm_axioms_hold(SemiNorm::linf(), 10000, rng));
  EXPECT_TRUE(seminorm_axioms_hold(SemiNorm::lp(2.7), 10000, rng));
  EXPECT_TRUE(seminorm_axioms_hold(SemiNorm::lp(1.0), 10000, rng));
  const std::vector<double> zeros(5, 0.0);
  const auto zero_norm = SemiNorm::weighted_l2(zeros);
  EXPECT_EQ(zero_norm(std::vector<double>{1.0, -2.0, 3.0, 4.0, 5.0}), 0.0);
  EXPECT_TRUE(seminorm_axioms_hold(zero_norm, 1000, rng));
  EXPECT_TRUE(seminorm_axioms_hold(SemiNorm::weighted_l2(std::vector<double>{0.5, 0.0, 2.0}), 10000, rng));
  EXPECT_FALSE(seminorm_axioms_hold(SemiNorm::lp(0.5), 10000, rng));
}

TEST(PricingTest, SparseAndDenseWeightsAgree) {
  const auto sparse = SemiNorm::weighted_l2(5, {{1, 2.0}, {4, 0.5}});
  const auto dense = SemiNorm::weighted_l2(sparse.dense_weights());
  const std::vector<double> q{3.0, -1.0, 7.0, 2.0, 4.0};
  EXPECT_DOUBLE_EQ(sparse(q), std::sqrt(2.0 * 1.0 + 0.5 * 16.0));
  EXPECT_DOUBLE_EQ(dense(q), sparse(q));
}

TEST(PricingTest, ArbitragePropertiesOnRandomExpressions) {
  std::mt19937_64 rng(8);
  ExprSampler sampler(rng, {});
  InstanceGenerator gen(4, rng);
  const std::vector<double> grid{0.0, 1e-4, 0.01, 0.5, 1.0, 3.0, 10.0, 1e3, 1e6, 1e12, kInfinity};
  for (int trial = 0; trial < 300; ++trial) {
    const auto expr = sampler.expr();
    ASSERT_TRUE(validate(expr));
    const LinearQuery q = gen.random_linear_query();
    double previous = kInfinity;
    const double at_zero = price(expr, PricedQuery(q, 0.0));
    for (double v : grid) {
      const double p = price(expr, PricedQuery(q, v));
      EXPECT_GE(p, 0.0);
      EXPECT_LE(p, previous * (1.0 + 1e-12)) << "v=" << v;
      EXPECT_GE(at_zero, p);
      previous = p;
    }
  }
}

TEST(PricingTest, BasePriceTimesVarianceIsConstant) {
  std::mt19937_64 rng(12);
  ExprSampler sampler(rng, {});
  InstanceGenerator gen(4, rng);
  for (int trial = 0; trial < 200; ++trial) {
    const SemiNorm f = sampler.seminorm();
    const LinearQuery q = gen.random_linear_query();
    const double norm = f(q.coefficients());
    for (double v : {1e-3, 0.7, 1.0, 42.0, 1e5}) {
      EXPECT_NEAR(v * base_price(f, PricedQuery(q, v)), norm * norm, 1e-12 * std::max(1.0, norm * norm));
    }
  }
}

TEST(PricingTest, BasePriceScaleInvariance) {
  std::mt19937_64 rng(13);
  ExprSampler sampler(rng, {});
  InstanceGenerator gen(4, rng);
  std::uniform_real_distribution<double> scale(-10.0, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    const SemiNorm f = sampler.seminorm();
    const LinearQuery q = gen.random_linear_query();
    const double c = scale(rng);
    const double v = gen.random_variance();
    if (c == 0.0 || v == 0.0 || std::isinf(v)) continue;
    const double original = base_price(f, PricedQuery(q, v));
    EXPECT_NEAR(base_price(f, PricedQuery(q.scaled(c), c * c * v)), original, 1e-12 * std::max(1.0, original));
  }
}

TEST(PricingTest, RandomExpressionsAreArbitrageFree) {
  std::mt19937_64 rng(21);
  ExprSampler sampler(rng, {});
  for (int e = 0; e < 40; ++e) {
    const auto expr = sampler.expr();
    InstanceGenerator gen(4, rng);
    const auto report = fuzz_price(as_price_fn(expr), 250, gen);
    EXPECT_TRUE(report.violations.empty()) << "expression " << e << ": " << report.violations.size();
    EXPECT_GT(report.random_filtered, 0u);
  }
}

TEST(PricingTest, GeometricMeanIsRejected) {
  const auto first = PriceExpr::leaf(SemiNorm::weighted_l2(std::vector<double>{1.0, 0.0}));
  const auto second = PriceExpr::leaf(SemiNorm::weighted_l2(std::vector<double>{0.0, 1.0}));
  const auto expr = PriceExpr::geomean(first, second);
  EXPECT_FALSE(validate(expr));
  const ArbitrageInstance instance{{PricedQuery(LinearQuery({1.0, 0.0}), 1.0), PricedQuery(LinearQuery({0.0, 1.0}), 1.0)},
                                   PricedQuery(LinearQuery({1.0, 1.0}), 2.0),
                                   true};
  ASSERT_TRUE(determines(instance.bundle, instance.target));
  const auto violation = check_instance(as_price_fn(expr), instance);
  ASSERT_TRUE(violation.has_value());
  EXPECT_EQ(violation->bundle_price, 0.0);
  EXPECT_DOUBLE_EQ(violation->target_price, 0.5);
}

TEST(PricingTest, ConstantPriceIsCaught) {
  std::mt19937_64 rng(22);
  InstanceGenerator gen(3, rng);
  const PriceFn constant = [](const PricedQuery&) { return 5.0; };
  EXPECT_FALSE(fuzz_price(constant, 500, gen).violations.empty());
}

TEST(PricingTest, AveragingCopiesNeverUndercuts) {
  std::mt19937_64 rng(33);
  ExprSampler sampler(rng, {});
  InstanceGenerator gen(4, rng);
  for (int trial = 0; trial < 300; ++trial) {
    const auto expr = sampler.expr();
    const LinearQuery q = gen.random_linear_query();
    const double v = std::uniform_real_distribution<double>(0.01, 1e4)(rng);
    for (int copies : {2, 3, 10, 100}) {
      const double single = price(expr, PricedQuery(q, v));
      const double averaged = price(expr, PricedQuery(q, v / copies));
      EXPECT_GE(copies * single * (1.0 + 1e-9), averaged);
    }
  }
}

// Differences are taken on the gap to the supremum, sup - f(x), which keeps
// them representable where f itself rounds to its bound.
void expect_concave_increasing(double (*gap)(double)) {
  const double h = 1e-3;
  double prev_diff = kInfinity;
  for (int k = 0; k < 100000; ++k) {
    const double x = k * h;
    const double diff = gap(x) - gap(x + h);
    ASSERT_GT(diff, 0.0) << "x=" << x;
    if (std::isfinite(prev_diff)) {
      ASSERT_LE(diff - prev_diff, 1e-9) << "x=" << x;
    }
    prev_diff = diff;
  }
}

TEST(PricingTest, BoundedCombinatorsAreConcaveAndIncreasing) {
  // pi/2 - atan(x) = atan(1/x)
  expect_concave_increasing([](double x) { return x == 0.0 ? std::numbers::pi / 2 : std::atan(1.0 / x); });
  // 1 - tanh(x) = 2 / (e^{2x} + 1)
  expect_concave_increasing([](double x) { return 2.0 / (std::exp(2.0 * x) + 1.0); });
  // 1 - x / sqrt(1 + x^2) = 1 / (sqrt(1 + x^2) (sqrt(1 + x^2) + x))
  expect_concave_increasing([](double x) {
    const double r = std::sqrt(1.0 + x * x);
    return 1.0 / (r * (r + x));
  });
}

}  // namespace
}  // namespace dpmarket

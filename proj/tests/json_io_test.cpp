#include "dpmarket/json_io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dpmarket/errors.hpp"
#include "support/random_exprs.hpp"

namespace dpmarket::io {
namespace {

TEST(JsonIoTest, ExtendedReals) {
  EXPECT_EQ(extended_to_json(kInfinity), json("inf"));
  EXPECT_EQ(extended_to_json(2.5), json(2.5));
  EXPECT_TRUE(std::isinf(extended_from_json(json("inf"), "v")));
  EXPECT_EQ(extended_from_json(json(0), "v"), 0.0);
  EXPECT_THROW(extended_from_json(json("infinity"), "v"), ValidationError);
}

TEST(JsonIoTest, PricedQueryRoundTrip) {
  const PricedQuery q(LinearQuery({1.0, -0.5, 0.0}), kInfinity);
  const auto back = priced_query_from_json(json::parse(to_json(q).dump()));
  EXPECT_EQ(back.query.coefficients()[1], -0.5);
  EXPECT_TRUE(std::isinf(back.variance));
  EXPECT_THROW(priced_query_from_json(json::parse(R"({"q":[1],"v":-1})")), ValidationError);
  EXPECT_THROW(priced_query_from_json(json::parse(R"({"q":[1]})")), ValidationError);
  EXPECT_THROW(priced_query_from_json(json::parse(R"({"q":["a"],"v":1})")), ValidationError);
}

TEST(JsonIoTest, AtanPriceFromDocs) {
  const auto expr = price_expr_from_json(
      json::parse(R"({"atan":{"scale":6366.2,"inner":{"lincomb":[[7.85e-4,{"base":"l2"}]]}}})"));
  EXPECT_TRUE(validate(expr));
  EXPECT_GT(price(expr, PricedQuery(LinearQuery({1.0}), 1.0)), 0.0);
}

TEST(JsonIoTest, RandomPriceRoundTrip) {
  std::mt19937_64 rng(60);
  testing::ExprSampler sampler(rng, {.n = 3});
  std::uniform_real_distribution<double> coeff(-3.0, 3.0);
  for (int t = 0; t < 300; ++t) {
    const auto expr = sampler.expr();
    const auto back = price_expr_from_json(json::parse(to_json(expr).dump()));
    EXPECT_EQ(to_json(back), to_json(expr));
    for (int k = 0; k < 5; ++k) {
      const PricedQuery q(LinearQuery({coeff(rng), coeff(rng), coeff(rng)}), std::exp(coeff(rng)));
      EXPECT_EQ(price(back, q), price(expr, q));
    }
  }
}

TEST(JsonIoTest, ContractPresets) {
  const auto a = contract_from_json(json::parse(R"({"option_a":{"knee":2,"scale":10}})"));
  const auto b = contract_from_json(json::parse(R"({"option_b":{"knee":2,"bound":10}})"));
  const auto lin = contract_from_json(json::parse(R"({"linear":{"c":0.5}})"));
  EXPECT_TRUE(validate(a));
  EXPECT_TRUE(validate(b));
  EXPECT_EQ(evaluate_contract(lin, 4.0), 2.0);
  EXPECT_LE(evaluate_contract(a, 1e9), 10.0);
  EXPECT_LE(evaluate_contract(b, 1e9), 10.0);
  EXPECT_EQ(to_json(contract_from_json(to_json(a))), to_json(a));
  EXPECT_THROW(contract_from_json(json::parse(R"({"option_a":{"knee":0}})")), ValidationError);
  EXPECT_THROW(contract_from_json(json::parse(R"({"quadratic":{"c":1}})")), ValidationError);
}

TEST(JsonIoTest, GeoMeanParsesButFailsValidation) {
  const auto expr = price_expr_from_json(json::parse(R"({"geomean":[{"base":"l2"},{"base":"linf"}]})"));
  EXPECT_FALSE(validate(expr));
}

TEST(JsonIoTest, MalformedExpressions) {
  for (const char* text : {R"({"base":"l3"})", R"({"lincomb":[]})", R"({"lincomb":[[1]]})",
                           R"({"base":"l2","max":[]})", R"({"power":{"inner":{"base":"l2"}}})", R"([1,2])",
                           R"({"sqrt":{"base":"l2"}})", R"({"base":{"lp":"two"}})"}) {
    EXPECT_THROW(price_expr_from_json(json::parse(text)), ValidationError) << text;
  }
}

TEST(JsonIoTest, CertificateJson) {
  DeterminacyCertificate cert;
  cert.feasible = true;
  cert.coefficients = {0.5, 0.5};
  cert.min_variance = kInfinity;
  const auto j = to_json(cert);
  EXPECT_EQ(j.at("min_variance"), json("inf"));
  EXPECT_EQ(j.at("coefficients").size(), 2u);
}

}  // namespace
}  // namespace dpmarket::io

#include "dpmarket/fuzz.hpp"

#include <cmath>

#include "dpmarket/determinacy.hpp"

namespace dpmarket {
namespace {

constexpr std::size_t kMaxFilterAttempts = 64;

double sum_variances(double a, double b) { return a + b; }

}  // namespace

InstanceGenerator::InstanceGenerator(std::size_t n, std::mt19937_64& rng, InstanceGeneratorOptions options)
    : n_(n), rng_(rng), options_(options) {}

LinearQuery InstanceGenerator::random_linear_query() {
  std::bernoulli_distribution sparse(options_.sparse_rate);
  std::bernoulli_distribution integral(0.5);
  std::uniform_int_distribution<int> small_int(-3, 3);
  std::uniform_real_distribution<double> real(-5.0, 5.0);
  std::vector<double> q(n_);
  for (double& x : q) {
    if (sparse(rng_)) {
      x = 0.0;
    } else if (integral(rng_)) {
      x = small_int(rng_);
    } else {
      x = real(rng_);
    }
  }
  return LinearQuery(std::move(q));
}

double InstanceGenerator::random_variance() {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng_);
  if (u < options_.zero_variance_rate) return 0.0;
  if (u < options_.zero_variance_rate + options_.infinite_variance_rate) return kInfinity;
  std::uniform_real_distribution<double> exponent(-2.0, 4.0);
  return std::pow(10.0, exponent(rng_));
}

PricedQuery InstanceGenerator::random_query() {
  if (!pool_.empty() && std::bernoulli_distribution(0.5)(rng_)) {
    std::uniform_int_distribution<std::size_t> pick(0, pool_.size() - 1);
    return pool_[pick(rng_)];
  }
  auto q = random_linear_query();
  return PricedQuery(std::move(q), random_variance());
}

ArbitrageInstance InstanceGenerator::derive(std::size_t depth) {
  enum Rule { kLeaf, kSum, kScalar, kRelax, kAverage };
  Rule rule = kLeaf;
  if (depth > 0) {
    std::discrete_distribution<int> pick({0.2, 0.3, 0.2, 0.15, 0.15});
    rule = static_cast<Rule>(pick(rng_));
  }

  switch (rule) {
    case kLeaf: {
      // Summation over nothing: the empty bundle answers (0, 0).
      if (std::bernoulli_distribution(0.05)(rng_)) return {QueryBundle{}, PricedQuery(LinearQuery::zero(n_), 0.0), true};
      auto q = random_query();
      return {QueryBundle{q}, q, true};
    }
    case kSum: {
      auto left = derive(depth - 1);
      auto right = derive(depth - 1);
      QueryBundle bundle = std::move(left.bundle);
      bundle.insert(bundle.end(), right.bundle.begin(), right.bundle.end());
      PricedQuery target(left.target.query.plus(right.target.query),
                         sum_variances(left.target.variance, right.target.variance));
      return {std::move(bundle), std::move(target), true};
    }
    case kScalar: {
      auto inner = derive(depth - 1);
      std::uniform_real_distribution<double> coeff(-3.0, 3.0);
      const double c = std::bernoulli_distribution(0.1)(rng_) ? 0.0 : coeff(rng_);
      // (0 q, 0 * v) is the free zero query even when v is infinite.
      const double v = c == 0.0 ? 0.0 : c * c * inner.target.variance;
      PricedQuery target(inner.target.query.scaled(c), v);
      return {std::move(inner.bundle), std::move(target), true};
    }
    case kRelax: {
      auto inner = derive(depth - 1);
      std::uniform_real_distribution<double> stretch(0.0, 3.0);
      const double v = std::bernoulli_distribution(0.1)(rng_)
                           ? kInfinity
                           : inner.target.variance * (1.0 + stretch(rng_));
      PricedQuery target(inner.target.query, v);
      return {std::move(inner.bundle), std::move(target), true};
    }
    case kAverage: {
      auto inner = derive(depth - 1);
      const std::size_t copies = std::uniform_int_distribution<std::size_t>(2, 3)(rng_);
      QueryBundle bundle;
      for (std::size_t k = 0; k < copies; ++k) {
        bundle.insert(bundle.end(), inner.bundle.begin(), inner.bundle.end());
      }
      PricedQuery target(inner.target.query, inner.target.variance / static_cast<double>(copies));
      return {std::move(bundle), std::move(target), true};
    }
  }
  auto q = random_query();
  return {QueryBundle{q}, q, true};
}

ArbitrageInstance InstanceGenerator::rule_forward() {
  const std::size_t depth = std::uniform_int_distribution<std::size_t>(1, options_.max_depth)(rng_);
  return derive(depth);
}

std::optional<ArbitrageInstance> InstanceGenerator::random_filtered() {
  const std::size_t m = std::uniform_int_distribution<std::size_t>(1, options_.max_bundle)(rng_);
  QueryBundle bundle;
  for (std::size_t j = 0; j < m; ++j) bundle.push_back(random_query());

  std::optional<PricedQuery> target;
  if (std::bernoulli_distribution(0.6)(rng_)) {
    // Target inside the span, priced at or above its minimal variance.
    std::uniform_real_distribution<double> coeff(-2.0, 2.0);
    std::vector<double> q(n_, 0.0);
    for (const auto& entry : bundle) {
      const double c = std::bernoulli_distribution(0.2)(rng_) ? 0.0 : coeff(rng_);
      for (std::size_t i = 0; i < n_; ++i) q[i] += c * entry.query[i];
    }
    LinearQuery query(std::move(q));
    const auto cert = min_variance(bundle, query);
    if (!cert.feasible) return std::nullopt;
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
    double v = cert.min_variance;
    if (u < 0.1) {
      v = kInfinity;
    } else if (u > 0.4) {
      v *= 1.0 + 3.0 * u;
    }
    target.emplace(std::move(query), v);
  } else {
    target.emplace(random_linear_query(), random_variance());
  }

  if (!determines(bundle, *target)) return std::nullopt;
  return ArbitrageInstance{std::move(bundle), std::move(*target), false};
}

std::optional<ArbitrageViolation> check_instance(const PriceFn& price_fn, const ArbitrageInstance& instance) {
  const double target_price = price_fn(instance.target);
  double bundle_price = 0.0;
  for (const auto& entry : instance.bundle) bundle_price += price_fn(entry);
  if (target_price <= bundle_price * (1.0 + kArbitrageSlack)) return std::nullopt;
  return ArbitrageViolation{instance, target_price, bundle_price};
}

std::vector<FuzzReport> fuzz_prices(std::span<const PriceFn> price_fns, std::size_t trials,
                                    InstanceGenerator& generator) {
  std::vector<FuzzReport> reports(price_fns.size());
  std::size_t rule_forward = 0;
  std::size_t random_filtered = 0;
  std::size_t rejected = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    std::optional<ArbitrageInstance> instance;
    if (t % 2 == 1) {
      for (std::size_t attempt = 0; attempt < kMaxFilterAttempts && !instance; ++attempt) {
        instance = generator.random_filtered();
        if (!instance) ++rejected;
      }
    }
    if (!instance) instance = generator.rule_forward();
    if (instance->rule_forward) {
      ++rule_forward;
    } else {
      ++random_filtered;
    }
    for (std::size_t k = 0; k < price_fns.size(); ++k) {
      if (auto violation = check_instance(price_fns[k], *instance)) {
        reports[k].violations.push_back(std::move(*violation));
      }
    }
  }
  for (auto& report : reports) {
    report.trials = trials;
    report.rule_forward = rule_forward;
    report.random_filtered = random_filtered;
    report.rejected = rejected;
  }
  return reports;
}

FuzzReport fuzz_price(const PriceFn& price_fn, std::size_t trials, InstanceGenerator& generator) {
  return fuzz_prices(std::span<const PriceFn>(&price_fn, 1), trials, generator).front();
}

}  // namespace dpmarket

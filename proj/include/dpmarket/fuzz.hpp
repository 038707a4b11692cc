#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <vector>

#include "dpmarket/pricing.hpp"
#include "dpmarket/query.hpp"

namespace dpmarket {

// A bundle that determines a target: buying the bundle lets the buyer derive
// the target's answer.
struct ArbitrageInstance {
  QueryBundle bundle;
  PricedQuery target;
  bool rule_forward = false;
};

struct InstanceGeneratorOptions {
  std::size_t max_depth = 3;
  std::size_t max_bundle = 5;  // random-filtered bundles
  double zero_variance_rate = 0.04;
  double infinite_variance_rate = 0.02;
  double sparse_rate = 0.3;  // chance each coefficient is forced to zero
};

// Produces determinacy instances two ways: forward, by applying the
// summation, scalar multiplication, relaxation and transitivity rules to
// random leaves; and by drawing random bundles and targets and keeping only
// those the determinacy checker accepts.
class InstanceGenerator {
 public:
  InstanceGenerator(std::size_t n, std::mt19937_64& rng, InstanceGeneratorOptions options = {});

  // Leaves are drawn from `pool` half of the time when it is non-empty.
  void set_leaf_pool(std::vector<PricedQuery> pool) { pool_ = std::move(pool); }

  ArbitrageInstance rule_forward();
  // nullopt when the drawn instance was not determined.
  std::optional<ArbitrageInstance> random_filtered();

  PricedQuery random_query();
  LinearQuery random_linear_query();
  double random_variance();

 private:
  ArbitrageInstance derive(std::size_t depth);

  std::size_t n_;
  std::mt19937_64& rng_;
  InstanceGeneratorOptions options_;
  std::vector<PricedQuery> pool_;
};

struct ArbitrageViolation {
  ArbitrageInstance instance;
  double target_price = 0.0;
  double bundle_price = 0.0;
};

// Relative slack allowed in pi(Q) <= sum_i pi(Q_i).
inline constexpr double kArbitrageSlack = 1e-9;

// The violation, if buying the bundle undercuts the target's price.
std::optional<ArbitrageViolation> check_instance(const PriceFn& price_fn, const ArbitrageInstance& instance);

struct FuzzReport {
  std::size_t trials = 0;
  std::size_t rule_forward = 0;
  std::size_t random_filtered = 0;
  std::size_t rejected = 0;  // random draws the determinacy checker refused
  std::vector<ArbitrageViolation> violations;
};

// Runs `trials` determined instances, alternating between the two
// generators, against `price_fn`.
FuzzReport fuzz_price(const PriceFn& price_fn, std::size_t trials, InstanceGenerator& generator);

// Same instances checked against several prices at once; one report each.
std::vector<FuzzReport> fuzz_prices(std::span<const PriceFn> price_fns, std::size_t trials,
                                    InstanceGenerator& generator);

}  // namespace dpmarket

#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "dpmarket/expr.hpp"
#include "dpmarket/pricing.hpp"
#include "dpmarket/query.hpp"

namespace dpmarket {

// Contract leaf W(eps) = c * eps.
struct LinearContract {
  double c = 0.0;
};

// Compensation curve W(eps) required by a data owner: non-decreasing, W(0) = 0.
using Contract = SubadditiveExpr<LinearContract>;

double evaluate_contract(const Contract& contract, double loss);
bool validate(const Contract& contract);

// Knee and scale parameters for the two offered contract shapes.
struct ContractOptions {
  double knee = 0.5;      // eps0
  double a_scale = 10.0;  // Option A ceiling
  double b_bound = 1.0;   // Option B ceiling
};

// Option A: min(eps / (2 eps0), A) pays little below the knee and keeps
// growing up to A. Option B: (2 B / pi) atan(eps / eps0) pays from the
// smallest losses but never more than B.
Contract option_a(const ContractOptions& options = {});
Contract option_b(const ContractOptions& options = {});

// Micro-payment leaf: gamma * c * |q_i| / sqrt(v / 2), i.e. c times the
// Laplace loss bound of item i.
struct BasicPayment {
  double c = 0.0;
  double gamma = 1.0;
};

// Micro-payment rule for one item. Combinators over Basic leaves.
using MicroPaymentRule = SubadditiveExpr<BasicPayment>;

bool validate(const MicroPaymentRule& rule);

// Throws ValidationError for an out-of-range item index.
double micropayment(const MicroPaymentRule& rule, const PricedQuery& query, std::size_t i);

// The rule that exactly compensates `contract` under the Laplace loss bound.
MicroPaymentRule rule_for_contract(const Contract& contract, double gamma);

// The same micro-payment expressed as a price expression of the whole query,
// for a market of n items.
PriceExpr rule_as_price(const MicroPaymentRule& rule, std::size_t item, std::size_t n);

// sum_i mu_i as a price expression; rules[i] pays item i.
PriceExpr synthesize_price(std::span<const MicroPaymentRule> rules);

// Transform argument placeholder: the j-th inner rule or contract.
struct Slot {
  std::size_t index = 0;
};
using TransformSpec = SubadditiveExpr<Slot>;

struct TransformedFramework {
  std::vector<MicroPaymentRule> rules;
  std::vector<Contract> contracts;
};

// mu_i = f_i(mu_i^1..mu_i^k) and W_i = f_i(W_i^1..W_i^k) for every item i.
// inner_rules[i] and inner_contracts[i] hold the k inner terms of item i.
// Throws ValidationError for a non-whitelisted transform or a bad slot.
TransformedFramework transform_rules(std::span<const TransformSpec> transforms,
                                     std::span<const std::vector<MicroPaymentRule>> inner_rules,
                                     std::span<const std::vector<Contract>> inner_contracts);

struct FrameworkReport {
  bool fair = true;
  bool micro_arbitrage_free = true;
  bool cost_recovering = true;
  bool compensating = true;
  // Smallest pi - sum mu over the samples with a finite, positive price.
  double margin = kInfinity;
  std::size_t samples_checked = 0;

  bool balanced() const { return fair && micro_arbitrage_free && cost_recovering && compensating; }
};

struct BalanceCheckOptions {
  std::size_t fuzz_instances_per_owner = 200;
  std::uint64_t seed = 1;
};

// Audits the four balance conditions over `samples`. rules[i] and
// contracts[i] belong to item i.
FrameworkReport check_balanced(const PriceFn& price_fn, std::span<const MicroPaymentRule> rules,
                               std::span<const Contract> contracts, double gamma,
                               std::span<const PricedQuery> samples, const BalanceCheckOptions& options = {});

FrameworkReport check_balanced(const PriceExpr& price_expr, std::span<const MicroPaymentRule> rules,
                               std::span<const Contract> contracts, double gamma,
                               std::span<const PricedQuery> samples, const BalanceCheckOptions& options = {});

}  // namespace dpmarket

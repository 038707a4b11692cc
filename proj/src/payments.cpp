#include "dpmarket/payments.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "dpmarket/errors.hpp"
#include "dpmarket/fuzz.hpp"
#include "dpmarket/privacy.hpp"

namespace dpmarket {
namespace {

bool finite_nonneg(double x) { return std::isfinite(x) && x >= 0.0; }

}  // namespace

double evaluate_contract(const Contract& contract, double loss) {
  if (std::isnan(loss) || loss < 0.0) throw ValidationError("privacy loss must be non-negative");
  return contract.evaluate([loss](const LinearContract& leaf) {
    return combinators::product_or_zero(leaf.c, loss);
  });
}

bool validate(const Contract& contract) {
  return contract.validate([](const LinearContract& leaf) { return finite_nonneg(leaf.c); });
}

Contract option_a(const ContractOptions& options) {
  return Contract::cutoff(Contract::leaf({1.0 / (2.0 * options.knee)}), options.a_scale);
}

Contract option_b(const ContractOptions& options) {
  return Contract::atan(Contract::leaf({1.0 / options.knee}), 2.0 * options.b_bound / std::numbers::pi);
}

bool validate(const MicroPaymentRule& rule) {
  return rule.validate([](const BasicPayment& leaf) {
    return finite_nonneg(leaf.c) && std::isfinite(leaf.gamma) && leaf.gamma > 0.0;
  });
}

double micropayment(const MicroPaymentRule& rule, const PricedQuery& query, std::size_t i) {
  if (i >= query.size()) {
    throw ValidationError("item index " + std::to_string(i) + " out of range");
  }
  const double qi = std::abs(query.query[i]);
  return rule.evaluate([&](const BasicPayment& leaf) {
    if (leaf.c == 0.0 || qi == 0.0) return 0.0;
    if (query.variance == 0.0) return kInfinity;
    if (std::isinf(query.variance)) return 0.0;
    return leaf.gamma * leaf.c * qi / std::sqrt(query.variance / 2.0);
  });
}

MicroPaymentRule rule_for_contract(const Contract& contract, double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ValidationError("domain bound must be positive");
  return contract.substitute<BasicPayment>(
      [gamma](const LinearContract& leaf) { return MicroPaymentRule::leaf({leaf.c, gamma}); });
}

PriceExpr rule_as_price(const MicroPaymentRule& rule, std::size_t item, std::size_t n) {
  if (item >= n) throw ValidationError("item index " + std::to_string(item) + " out of range");
  // gamma c |q_i| / sqrt(v/2) = sqrt(w q_i^2 / v) with w = 2 gamma^2 c^2.
  return rule.substitute<SemiNorm>([item, n](const BasicPayment& leaf) {
    const double w = 2.0 * leaf.gamma * leaf.gamma * leaf.c * leaf.c;
    std::vector<SemiNorm::Weight> weights;
    if (w != 0.0) weights.push_back({item, w});
    return PriceExpr::power(PriceExpr::leaf(SemiNorm::weighted_l2(n, std::move(weights))), 0.5);
  });
}

PriceExpr synthesize_price(std::span<const MicroPaymentRule> rules) {
  if (rules.empty()) throw ValidationError("cannot synthesize a price without micro-payment rules");
  std::vector<std::pair<double, PriceExpr>> terms;
  terms.reserve(rules.size());
  for (std::size_t i = 0; i < rules.size(); ++i) {
    if (!validate(rules[i])) throw ValidationError("invalid micro-payment rule for item " + std::to_string(i));
    terms.emplace_back(1.0, rule_as_price(rules[i], i, rules.size()));
  }
  return PriceExpr::linear_comb(std::move(terms));
}

TransformedFramework transform_rules(std::span<const TransformSpec> transforms,
                                     std::span<const std::vector<MicroPaymentRule>> inner_rules,
                                     std::span<const std::vector<Contract>> inner_contracts) {
  require_dimension(transforms.size(), inner_rules.size(), "transform_rules (rules)");
  require_dimension(transforms.size(), inner_contracts.size(), "transform_rules (contracts)");
  TransformedFramework out;
  for (std::size_t i = 0; i < transforms.size(); ++i) {
    const auto& rules = inner_rules[i];
    const auto& contracts = inner_contracts[i];
    require_dimension(rules.size(), contracts.size(), "transform_rules (inner terms)");
    const std::size_t k = rules.size();
    const bool ok = transforms[i].validate([k](const Slot& slot) { return slot.index < k; });
    if (!ok) throw ValidationError("transform for item " + std::to_string(i) + " is not whitelisted");
    out.rules.push_back(transforms[i].substitute<BasicPayment>([&](const Slot& s) { return rules[s.index]; }));
    out.contracts.push_back(transforms[i].substitute<LinearContract>([&](const Slot& s) { return contracts[s.index]; }));
  }
  return out;
}

FrameworkReport check_balanced(const PriceFn& price_fn, std::span<const MicroPaymentRule> rules,
                               std::span<const Contract> contracts, double gamma,
                               std::span<const PricedQuery> samples, const BalanceCheckOptions& options) {
  const std::size_t n = rules.size();
  require_dimension(n, contracts.size(), "check_balanced (contracts)");
  FrameworkReport report;

  std::vector<double> payments(n);
  for (const auto& query : samples) {
    require_dimension(n, query.size(), "check_balanced (samples)");
    ++report.samples_checked;
    const double total_price = price_fn(query);
    double total_paid = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      payments[i] = micropayment(rules[i], query, i);
      total_paid += payments[i];
      if (query.query[i] == 0.0 && payments[i] != 0.0) report.fair = false;
      const double owed = evaluate_contract(contracts[i], loss_bound(query, i, gamma));
      const bool covered = std::isinf(owed) ? std::isinf(payments[i])
                                            : payments[i] >= owed - 1e-9 * std::max(1.0, owed);
      if (!covered) report.compensating = false;
    }
    if (!(total_paid <= total_price * (1.0 + 1e-9))) report.cost_recovering = false;
    if (std::isfinite(total_price) && total_price > 0.0) {
      report.margin = std::min(report.margin, total_price - total_paid);
    }
  }

  std::vector<PriceFn> micro_prices;
  micro_prices.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    micro_prices.emplace_back([rule = rules[i], i](const PricedQuery& q) { return micropayment(rule, q, i); });
  }
  std::mt19937_64 rng(options.seed);
  InstanceGenerator generator(n, rng);
  generator.set_leaf_pool(std::vector<PricedQuery>(samples.begin(), samples.end()));
  for (const auto& fuzz : fuzz_prices(micro_prices, options.fuzz_instances_per_owner, generator)) {
    if (!fuzz.violations.empty()) report.micro_arbitrage_free = false;
  }
  return report;
}

FrameworkReport check_balanced(const PriceExpr& price_expr, std::span<const MicroPaymentRule> rules,
                               std::span<const Contract> contracts, double gamma,
                               std::span<const PricedQuery> samples, const BalanceCheckOptions& options) {
  if (!validate(price_expr)) throw ValidationError("price expression failed validation");
  return check_balanced(as_price_fn(price_expr), rules, contracts, gamma, samples, options);
}

}  // namespace dpmarket

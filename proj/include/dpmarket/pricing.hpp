#pragma once

#include <cstddef>
#include <functional>
#include <random>
#include <vector>

#include "dpmarket/expr.hpp"
#include "dpmarket/query.hpp"

namespace dpmarket {

// A semi-norm f on query vectors. Base prices are f(q)^2 / v, which is
// arbitrage-free exactly when f is a semi-norm.
struct SemiNorm {
  enum class Kind { kL2, kLinf, kLp, kWeightedL2 };
  struct Weight {
    std::size_t index;
    double value;  // >= 0
  };

  Kind kind = Kind::kL2;
  double p = 2.0;  // kLp only, p >= 1
  // kWeightedL2 only: sqrt(sum_i w_i q_i^2) over queries of length `dimension`,
  // storing the non-zero weights.
  std::size_t dimension = 0;
  std::vector<Weight> weights;

  static SemiNorm l2() { return {}; }
  static SemiNorm linf() {
    SemiNorm f;
    f.kind = Kind::kLinf;
    return f;
  }
  static SemiNorm lp(double p) {
    SemiNorm f;
    f.kind = Kind::kLp;
    f.p = p;
    return f;
  }
  static SemiNorm weighted_l2(std::span<const double> dense);
  static SemiNorm weighted_l2(std::size_t dimension, std::vector<Weight> nonzero);

  std::vector<double> dense_weights() const;

  // Throws ValidationError on a weight-vector length mismatch.
  double operator()(std::span<const double> q) const;

  bool valid() const;
};

using PriceExpr = SubadditiveExpr<SemiNorm>;

// Any price function of a query; used to audit expressions and, in tests,
// deliberately broken pricing.
using PriceFn = std::function<double(const PricedQuery&)>;

// f(q)^2 / v with the limits 0/0 = 0, x/0 = inf and x/inf = 0.
double base_price(const SemiNorm& f, const PricedQuery& query);

double price(const PriceExpr& expr, const PricedQuery& query);

// True iff only whitelisted nodes with in-range parameters appear.
bool validate(const PriceExpr& expr);

PriceFn as_price_fn(PriceExpr expr);

// Samples random vectors and scalars and checks absolute homogeneity and the
// triangle inequality to 1e-9 relative. Weighted norms use their own length;
// the rest use `dimension`.
bool seminorm_axioms_hold(const SemiNorm& f, std::size_t trials, std::mt19937_64& rng,
                          std::size_t dimension = 4);

// (2 p / pi) * atan(c * ||q||_2^2 / v): a bounded price that charges
// `full_price` for the exact answer.
PriceExpr bounded_atan_price(double full_price, double c);

}  // namespace dpmarket

#include "dpmarket/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace dpmarket {
namespace {

double scaled_p_norm(std::span<const double> q, double p) {
  double scale = 0.0;
  for (double x : q) scale = std::max(scale, std::abs(x));
  if (scale == 0.0) return 0.0;
  double sum = 0.0;
  for (double x : q) sum += std::pow(std::abs(x) / scale, p);
  return scale * std::pow(sum, 1.0 / p);
}

}  // namespace

double SemiNorm::operator()(std::span<const double> q) const {
  switch (kind) {
    case Kind::kL2:
      return scaled_p_norm(q, 2.0);
    case Kind::kLinf: {
      double best = 0.0;
      for (double x : q) best = std::max(best, std::abs(x));
      return best;
    }
    case Kind::kLp:
      return scaled_p_norm(q, p);
    case Kind::kWeightedL2: {
      require_dimension(dimension, q.size(), "weighted L2 semi-norm");
      double sum = 0.0;
      for (const auto& w : weights) sum += w.value * q[w.index] * q[w.index];
      return std::sqrt(sum);
    }
  }
  return 0.0;
}

bool SemiNorm::valid() const {
  switch (kind) {
    case Kind::kL2:
    case Kind::kLinf:
      return true;
    case Kind::kLp:
      return std::isfinite(p) && p >= 1.0;
    case Kind::kWeightedL2:
      if (dimension == 0) return false;
      return std::all_of(weights.begin(), weights.end(), [this](const Weight& w) {
        return w.index < dimension && std::isfinite(w.value) && w.value >= 0.0;
      });
  }
  return false;
}

SemiNorm SemiNorm::weighted_l2(std::span<const double> dense) {
  SemiNorm f;
  f.kind = Kind::kWeightedL2;
  f.dimension = dense.size();
  for (std::size_t i = 0; i < dense.size(); ++i) {
    if (dense[i] != 0.0) f.weights.push_back({i, dense[i]});
  }
  return f;
}

SemiNorm SemiNorm::weighted_l2(std::size_t dimension, std::vector<Weight> nonzero) {
  SemiNorm f;
  f.kind = Kind::kWeightedL2;
  f.dimension = dimension;
  f.weights = std::move(nonzero);
  return f;
}

std::vector<double> SemiNorm::dense_weights() const {
  std::vector<double> dense(dimension, 0.0);
  for (const auto& w : weights) {
    if (w.index < dimension) dense[w.index] += w.value;
  }
  return dense;
}

double base_price(const SemiNorm& f, const PricedQuery& query) {
  const double norm = f(query.query.coefficients());
  if (norm == 0.0) return 0.0;
  if (query.variance == 0.0) return kInfinity;
  if (std::isinf(query.variance)) return 0.0;
  // norm^2 / v, kept finite for large norms.
  return (norm / std::sqrt(query.variance)) * (norm / std::sqrt(query.variance));
}

double price(const PriceExpr& expr, const PricedQuery& query) {
  return expr.evaluate([&](const SemiNorm& f) { return base_price(f, query); });
}

bool validate(const PriceExpr& expr) {
  return expr.validate([](const SemiNorm& f) { return f.valid(); });
}

PriceFn as_price_fn(PriceExpr expr) {
  return [expr = std::move(expr)](const PricedQuery& q) { return price(expr, q); };
}

bool seminorm_axioms_hold(const SemiNorm& f, std::size_t trials, std::mt19937_64& rng,
                          std::size_t dimension) {
  const std::size_t n = f.kind == SemiNorm::Kind::kWeightedL2 ? f.dimension : dimension;
  std::uniform_real_distribution<double> coord(-10.0, 10.0);
  std::uniform_real_distribution<double> scalar(-100.0, 100.0);
  std::vector<double> a(n), b(n), sum(n), scaled(n);
  for (std::size_t t = 0; t < trials; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = coord(rng);
      b[i] = coord(rng);
    }
    const double c = scalar(rng);
    for (std::size_t i = 0; i < n; ++i) {
      sum[i] = a[i] + b[i];
      scaled[i] = c * a[i];
    }
    const double fa = f(a);
    const double fb = f(b);
    const double lhs = f(scaled);
    const double rhs = std::abs(c) * fa;
    if (std::abs(lhs - rhs) > 1e-9 * std::max(1.0, std::abs(rhs))) return false;
    if (f(sum) > (fa + fb) * (1.0 + 1e-9) + 1e-300) return false;
    if (fa < 0.0) return false;
  }
  return true;
}

PriceExpr bounded_atan_price(double full_price, double c) {
  return PriceExpr::atan(PriceExpr::linear_comb({{c, PriceExpr::leaf(SemiNorm::l2())}}),
                         2.0 * full_price / std::numbers::pi);
}

}  // namespace dpmarket

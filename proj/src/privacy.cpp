#include "dpmarket/privacy.hpp"

#include <cmath>
#include <string>

#include "dpmarket/errors.hpp"

namespace dpmarket {
namespace {

void require_index(const LinearQuery& q, std::size_t i) {
  if (i >= q.size()) {
    throw ValidationError("item index " + std::to_string(i) + " out of range for a query of length " +
                          std::to_string(q.size()));
  }
}

void require_gamma(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ValidationError("domain bound must be positive");
}

}  // namespace

NoiseSource::NoiseSource(std::uint64_t seed, std::uint64_t first_draw)
    : seed_(seed), next_draw_(first_draw), engine_(seed) {
  engine_.discard(first_draw);
}

double NoiseSource::uniform() {
  const std::uint64_t word = engine_();
  ++next_draw_;
  return (static_cast<double>(word >> 11) + 0.5) * 0x1.0p-53;
}

double laplace_quantile(double u, double scale) {
  if (scale == 0.0) return 0.0;
  if (u < 0.5) return scale * std::log(2.0 * u);
  return -scale * std::log(2.0 * (1.0 - u));
}

double NoiseSource::laplace(double scale) { return laplace_quantile(uniform(), scale); }

NoiseSpec NoiseSpec::for_variance(double variance) {
  if (!(variance >= 0.0) || !std::isfinite(variance)) {
    throw ValidationError("Laplace noise needs a finite non-negative variance");
  }
  return NoiseSpec{Kind::kLaplace, std::sqrt(variance / 2.0)};
}

double answer(const PricedQuery& query, const Database& x, NoiseSource& noise) {
  const double truth = evaluate(query.query, x);
  const NoiseSpec spec = NoiseSpec::for_variance(query.variance);
  return truth + noise.laplace(spec.scale);
}

double sensitivity(const LinearQuery& q, std::size_t i, double gamma) {
  require_index(q, i);
  require_gamma(gamma);
  return gamma * std::abs(q[i]);
}

double loss_bound(const PricedQuery& query, std::size_t i, double gamma) {
  const double s = sensitivity(query.query, i, gamma);
  if (s == 0.0) return 0.0;
  if (query.variance == 0.0) return kInfinity;
  return s / std::sqrt(query.variance / 2.0);
}

double compose_loss(std::span<const double> coefficients, std::span<const double> losses) {
  require_dimension(coefficients.size(), losses.size(), "compose_loss");
  double total = 0.0;
  for (std::size_t j = 0; j < losses.size(); ++j) {
    if (coefficients[j] == 0.0) continue;
    total += std::abs(coefficients[j]) * losses[j];
  }
  return total;
}

}  // namespace dpmarket

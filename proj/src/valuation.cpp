#include "dpmarket/valuation.hpp"

#include <cmath>
#include <string>

#include "dpmarket/errors.hpp"

namespace dpmarket {
namespace {

// b = sqrt(v/2); this extension needs 0 < v < inf.
double answer_scale(const PricedQuery& query) {
  if (query.variance == 0.0) {
    throw ValidationError("private valuations cannot price the exact answer (v = 0)");
  }
  if (std::isinf(query.variance)) throw ValidationError("private valuations need a finite variance");
  return std::sqrt(query.variance / 2.0);
}

void check_fit(const PricedQuery& query, const ValuationProfile& profile, double gamma) {
  require_dimension(profile.size(), query.size(), "private valuation");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ValidationError("domain bound must be positive");
}

void check_index(const ValuationProfile& profile, std::size_t i) {
  if (i >= profile.size()) throw ValidationError("item index " + std::to_string(i) + " out of range");
}

}  // namespace

ValuationProfile::ValuationProfile(std::vector<double> constants, double delta, double price_noise_scale)
    : constants_(std::move(constants)), delta_(delta), price_noise_scale_(price_noise_scale) {
  if (!std::isfinite(delta_) || delta_ < 0.0) throw ValidationError("delta must be finite and non-negative");
  if (!std::isfinite(price_noise_scale_) || !(price_noise_scale_ > delta_)) {
    throw ValidationError("b_prime must exceed delta, otherwise the expected price is infinite");
  }
  for (std::size_t i = 0; i < constants_.size(); ++i) {
    if (!(constants_[i] >= 0.0 && constants_[i] <= delta_)) {
      throw ValidationError("contract constant " + std::to_string(i) + " lies outside [0, delta]");
    }
  }
}

double expected_price(const PricedQuery& query, const ValuationProfile& profile, double gamma) {
  check_fit(query, profile, gamma);
  const double b = answer_scale(query);
  const double b_prime = profile.price_noise_scale();
  double weighted = 0.0;
  for (std::size_t i = 0; i < profile.size(); ++i) weighted += profile.constants()[i] * std::abs(query.query[i]);
  return gamma * b_prime / (b * (b_prime - profile.delta())) * weighted;
}

double price_with_noise(const PricedQuery& query, const ValuationProfile& profile, double gamma, double rho) {
  return expected_price(query, profile, gamma) + rho;
}

double noisy_price(const PricedQuery& query, const ValuationProfile& profile, double gamma,
                   NoiseSource& noise) {
  const double expected = expected_price(query, profile, gamma);
  return expected + noise.laplace(profile.price_noise_scale());
}

double price_sensitivity(const PricedQuery& query, const ValuationProfile& profile, double gamma,
                         std::size_t i) {
  check_fit(query, profile, gamma);
  check_index(profile, i);
  const double b = answer_scale(query);
  const double b_prime = profile.price_noise_scale();
  return gamma * b_prime * std::abs(query.query[i]) * profile.delta() / (b * (b_prime - profile.delta()));
}

double expected_compensation(const PricedQuery& query, const ValuationProfile& profile, double gamma,
                             std::size_t i) {
  check_fit(query, profile, gamma);
  check_index(profile, i);
  const double b = answer_scale(query);
  const double answer_loss = gamma * std::abs(query.query[i]) / b;
  const double price_loss = price_sensitivity(query, profile, gamma, i) / profile.price_noise_scale();
  return (answer_loss + price_loss) * profile.constants()[i];
}

double micropayment_general(const PricedQuery& query, const ValuationProfile& profile, double gamma,
                            std::size_t i, double realized_price) {
  check_index(profile, i);
  return micropayments_general(query, profile, gamma, realized_price)[i];
}

std::vector<double> micropayments_general(const PricedQuery& query, const ValuationProfile& profile,
                                          double gamma, double realized_price) {
  std::vector<double> out(profile.size());
  double expected = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = expected_compensation(query, profile, gamma, i);
    expected += out[i];
  }
  // The compensations sum to the expected price; splitting the deviation
  // from their computed sum keeps sum_i mu_i on the realized price.
  const double share = (realized_price - expected) / static_cast<double>(out.size());
  for (double& mu : out) mu += share;
  // Rounding over many owners: the last one absorbs what the sum misses.
  double others = 0.0;
  for (std::size_t i = 0; i + 1 < out.size(); ++i) others += out[i];
  if (!out.empty()) out.back() = realized_price - others;
  return out;
}

}  // namespace dpmarket

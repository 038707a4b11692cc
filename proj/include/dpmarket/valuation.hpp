#pragma once

#include <cstddef>
#include <vector>

#include "dpmarket/privacy.hpp"
#include "dpmarket/query.hpp"

namespace dpmarket {

// Linear contract constants that are themselves private. Prices are released
// through a second Laplace mechanism over the constants, so every guarantee
// holds in expectation while sum_i mu_i equals the realized price exactly.
class ValuationProfile {
 public:
  // Throws ValidationError unless every c_i lies in [0, delta] and
  // price_noise_scale > delta (otherwise the expected price is infinite).
  ValuationProfile(std::vector<double> constants, double delta, double price_noise_scale);

  const std::vector<double>& constants() const noexcept { return constants_; }
  double delta() const noexcept { return delta_; }
  double price_noise_scale() const noexcept { return price_noise_scale_; }
  std::size_t size() const noexcept { return constants_.size(); }

 private:
  std::vector<double> constants_;
  double delta_;
  double price_noise_scale_;
};

// gamma b' / (b (b' - delta)) * sum_i c_i |q_i| with b = sqrt(v / 2).
double expected_price(const PricedQuery& query, const ValuationProfile& profile, double gamma);

// expected_price + rho for a given realization rho of the price noise.
double price_with_noise(const PricedQuery& query, const ValuationProfile& profile, double gamma, double rho);

// expected_price + Lap(b'). May be negative.
double noisy_price(const PricedQuery& query, const ValuationProfile& profile, double gamma,
                   NoiseSource& noise);

// Sensitivity of the price mechanism to owner i's constant:
// gamma b' |q_i| delta / (b (b' - delta)).
double price_sensitivity(const PricedQuery& query, const ValuationProfile& profile, double gamma,
                         std::size_t i);

// (s_i(K)/b + s_i(K')/b') c_i + (realized - expected) / n.
double micropayment_general(const PricedQuery& query, const ValuationProfile& profile, double gamma,
                            std::size_t i, double realized_price);

// All n micro-payments for one realized price.
std::vector<double> micropayments_general(const PricedQuery& query, const ValuationProfile& profile,
                                          double gamma, double realized_price);

// c_i (s_i(K)/b + s_i(K')/b'): what owner i must receive on average.
double expected_compensation(const PricedQuery& query, const ValuationProfile& profile, double gamma,
                             std::size_t i);

}  // namespace dpmarket

#pragma once

#include <cstdint>
#include <random>
#include <span>

#include "dpmarket/query.hpp"

namespace dpmarket {

// Reproducible noise: draw k of a source seeded with s is the k-th 64-bit
// output of mt19937_64(s), so any draw can be re-derived from (seed, index)
// alone. Each Laplace sample consumes exactly one draw.
class NoiseSource {
 public:
  explicit NoiseSource(std::uint64_t seed, std::uint64_t first_draw = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  // Index of the draw the next call will consume.
  std::uint64_t next_draw() const noexcept { return next_draw_; }

  // Uniform on the open interval (0, 1) with 53 bits of resolution.
  double uniform();

  // Laplace(0, scale) by inverse CDF; scale 0 yields exactly 0 and still
  // consumes a draw.
  double laplace(double scale);

 private:
  std::uint64_t seed_;
  std::uint64_t next_draw_;
  std::mt19937_64 engine_;
};

// Inverse CDF of Laplace(0, scale) at u in (0, 1).
double laplace_quantile(double u, double scale);

// Noise calibrated to a variance bound. Only Laplace noise is supported.
struct NoiseSpec {
  enum class Kind { kLaplace };

  Kind kind = Kind::kLaplace;
  double scale = 0.0;  // b, with noise variance 2 b^2

  // b = sqrt(v / 2), so the noise variance is exactly v.
  static NoiseSpec for_variance(double variance);
};

// q(x) + Lap(sqrt(v/2)). Variance must be finite.
double answer(const PricedQuery& query, const Database& x, NoiseSource& noise);

// gamma * |q_i|: the largest change in q(x) from zeroing item i.
double sensitivity(const LinearQuery& q, std::size_t i, double gamma);

// gamma * |q_i| / sqrt(v / 2); inf when v = 0 and q_i != 0, 0 when q_i = 0.
double loss_bound(const PricedQuery& query, std::size_t i, double gamma);

// sum_j |c_j| * eps_j with 0 * inf = 0.
double compose_loss(std::span<const double> coefficients, std::span<const double> losses);

}  // namespace dpmarket

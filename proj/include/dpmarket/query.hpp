#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace dpmarket {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// A linear query: the answer on database x is the dot product q . x.
class LinearQuery {
 public:
  // Throws ValidationError if empty or if any coefficient is non-finite.
  explicit LinearQuery(std::vector<double> coefficients);

  static LinearQuery zero(std::size_t n);

  std::size_t size() const noexcept { return coefficients_.size(); }
  double operator[](std::size_t i) const { return coefficients_[i]; }
  std::span<const double> coefficients() const noexcept { return coefficients_; }

  bool is_zero() const noexcept;
  double l2_norm() const noexcept;

  LinearQuery scaled(double c) const;
  LinearQuery plus(const LinearQuery& other) const;

  bool operator==(const LinearQuery&) const = default;

 private:
  std::vector<double> coefficients_;
};

// The unit of sale: a query together with the largest noise variance the
// buyer accepts. Variance may be +inf (no information at all).
struct PricedQuery {
  PricedQuery(LinearQuery q, double v);

  LinearQuery query;
  double variance;

  std::size_t size() const noexcept { return query.size(); }
  bool operator==(const PricedQuery&) const = default;
};

// A multiset of purchases; duplicates are distinct purchases.
using QueryBundle = std::vector<PricedQuery>;

// Private data items, each bounded in magnitude by domain_bound (gamma).
class Database {
 public:
  Database(std::vector<double> items, double domain_bound);

  std::size_t size() const noexcept { return items_.size(); }
  double operator[](std::size_t i) const { return items_[i]; }
  std::span<const double> items() const noexcept { return items_; }
  double domain_bound() const noexcept { return domain_bound_; }

 private:
  std::vector<double> items_;
  double domain_bound_;
};

// Exact (unperturbed) answer sum_i q_i * x_i.
double evaluate(const LinearQuery& q, const Database& x);

// Copy of x with item i set to zero.
Database zeroed(const Database& x, std::size_t i);

// Throws ValidationError unless `actual == expected`.
void require_dimension(std::size_t expected, std::size_t actual, const char* what);

}  // namespace dpmarket

#include "dpmarket/query.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "dpmarket/errors.hpp"

namespace dpmarket {

void require_dimension(std::size_t expected, std::size_t actual, const char* what) {
  if (expected != actual) {
    throw ValidationError(std::string("dimension mismatch in ") + what + ": expected " +
                          std::to_string(expected) + ", got " + std::to_string(actual));
  }
}

LinearQuery::LinearQuery(std::vector<double> coefficients)
    : coefficients_(std::move(coefficients)) {
  if (coefficients_.empty()) throw ValidationError("linear query must have at least one coefficient");
  for (double c : coefficients_) {
    if (!std::isfinite(c)) throw ValidationError("linear query coefficients must be finite");
  }
}

LinearQuery LinearQuery::zero(std::size_t n) { return LinearQuery(std::vector<double>(n, 0.0)); }

bool LinearQuery::is_zero() const noexcept {
  for (double c : coefficients_) {
    if (c != 0.0) return false;
  }
  return true;
}

double LinearQuery::l2_norm() const noexcept {
  double scale = 0.0;
  for (double c : coefficients_) scale = std::max(scale, std::abs(c));
  if (scale == 0.0) return 0.0;
  double sum = 0.0;
  for (double c : coefficients_) sum += (c / scale) * (c / scale);
  return scale * std::sqrt(sum);
}

LinearQuery LinearQuery::scaled(double c) const {
  std::vector<double> out(coefficients_);
  for (double& v : out) v *= c;
  return LinearQuery(std::move(out));
}

LinearQuery LinearQuery::plus(const LinearQuery& other) const {
  require_dimension(size(), other.size(), "query sum");
  std::vector<double> out(coefficients_);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += other[i];
  return LinearQuery(std::move(out));
}

PricedQuery::PricedQuery(LinearQuery q, double v) : query(std::move(q)), variance(v) {
  if (std::isnan(variance) || variance < 0.0) {
    throw ValidationError("query variance must be a non-negative number or inf");
  }
}

Database::Database(std::vector<double> items, double domain_bound)
    : items_(std::move(items)), domain_bound_(domain_bound) {
  if (items_.empty()) throw ValidationError("database must hold at least one item");
  if (!(domain_bound_ > 0.0) || !std::isfinite(domain_bound_)) {
    throw ValidationError("domain bound must be a positive finite number");
  }
  for (std::size_t i = 0; i < items_.size(); ++i) {
    if (!std::isfinite(items_[i]) || std::abs(items_[i]) > domain_bound_) {
      throw ValidationError("database item " + std::to_string(i) + " lies outside [-gamma, gamma]");
    }
  }
}

double evaluate(const LinearQuery& q, const Database& x) {
  require_dimension(x.size(), q.size(), "evaluate");
  double sum = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) sum += q[i] * x[i];
  return sum;
}

Database zeroed(const Database& x, std::size_t i) {
  if (i >= x.size()) throw ValidationError("item index " + std::to_string(i) + " out of range");
  std::vector<double> items(x.items().begin(), x.items().end());
  items[i] = 0.0;
  return Database(std::move(items), x.domain_bound());
}

}  // namespace dpmarket

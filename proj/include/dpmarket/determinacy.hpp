#pragma once

#include <span>
#include <vector>

#include "dpmarket/query.hpp"

namespace dpmarket {

// Relative tolerance on span membership: || sum c_i q_i - q ||_2 <= tol * max(1, ||q||_2).
inline constexpr double kSpanTolerance = 1e-9;
// Relative tolerance on the variance comparison in determines().
inline constexpr double kVarianceTolerance = 1e-9;

// Witness for bundle -> target: the minimum-variance unbiased linear
// combination of the bundle's answers that reproduces the target query.
struct DeterminacyCertificate {
  bool feasible = false;
  std::vector<double> coefficients;  // one per bundle entry; empty if infeasible
  double min_variance = kInfinity;
  double residual_norm = 0.0;
};

// Solves  min sum_i c_i^2 v_i  s.t.  sum_i c_i q_i = q.
//
// Entries with v_i = 0 are free: the target is first reduced modulo their span
// and the remaining residual is solved over the positive-variance entries by a
// complete orthogonal decomposition of the variance-weighted system. Entries
// with v_i = inf never receive weight. Among optimal solutions the one with
// the smallest coefficients on the zero-variance entries is returned.
DeterminacyCertificate min_variance(std::span<const PricedQuery> bundle, const LinearQuery& target);

// True iff the bundle linearly answers `target` within its variance bound.
bool determines(std::span<const PricedQuery> bundle, const PricedQuery& target);

// Combines realized answers to the bundle into an answer for the target.
double derive_answer(std::span<const double> answers, const DeterminacyCertificate& cert);

}  // namespace dpmarket

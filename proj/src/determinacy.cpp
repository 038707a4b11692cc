#include "dpmarket/determinacy.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "dpmarket/errors.hpp"

namespace dpmarket {
namespace {

Eigen::MatrixXd columns_of(std::span<const PricedQuery> bundle, const std::vector<std::size_t>& idx,
                           std::size_t n) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) {
    const auto q = bundle[idx[j]].query.coefficients();
    for (std::size_t r = 0; r < n; ++r) out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = q[r];
  }
  return out;
}

constexpr double kProjectionResidue = 1e-12;
// Pivots below this fraction of the largest count as zero.
constexpr double kRankThreshold = 1e-12;

}  // namespace

DeterminacyCertificate min_variance(std::span<const PricedQuery> bundle, const LinearQuery& target) {
  const std::size_t n = target.size();
  for (const auto& entry : bundle) require_dimension(n, entry.size(), "determinacy bundle");

  const Eigen::Map<const Eigen::VectorXd> q(target.coefficients().data(), static_cast<Eigen::Index>(n));
  const double q_norm = target.l2_norm();
  const double tolerance = kSpanTolerance * std::max(1.0, q_norm);

  std::vector<std::size_t> free_idx;      // v == 0
  std::vector<std::size_t> weighted_idx;  // 0 < v < inf
  for (std::size_t i = 0; i < bundle.size(); ++i) {
    const double v = bundle[i].variance;
    if (v == 0.0) {
      free_idx.push_back(i);
    } else if (std::isfinite(v)) {
      weighted_idx.push_back(i);
    }
  }

  const Eigen::MatrixXd zero_var = columns_of(bundle, free_idx, n);
  const Eigen::MatrixXd weighted = columns_of(bundle, weighted_idx, n);

  // Stage 1: strip the component of the target (and of the weighted columns)
  // lying in the span of the zero-variance queries.
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> free_cod;
  Eigen::VectorXd q_perp = q;
  Eigen::MatrixXd weighted_perp = weighted;
  if (!free_idx.empty()) {
    free_cod.setThreshold(kRankThreshold);
    free_cod.compute(zero_var);
    q_perp -= zero_var * free_cod.solve(q);
    if (!weighted_idx.empty()) weighted_perp -= zero_var * free_cod.solve(weighted);
    // Rounding residue of a vector inside the span is not signal.
    if (q_perp.norm() <= kProjectionResidue * q_norm) q_perp.setZero();
    for (Eigen::Index j = 0; j < weighted_perp.cols(); ++j) {
      if (weighted_perp.col(j).norm() <= kProjectionResidue * weighted.col(j).norm()) weighted_perp.col(j).setZero();
    }
  }

  // Stage 2: minimum-norm solution of the variance-weighted system
  // (P D^{-1/2}) y = q_perp, then c = D^{-1/2} y.
  Eigen::VectorXd c_weighted = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(weighted_idx.size()));
  if (!weighted_idx.empty()) {
    Eigen::VectorXd inv_sqrt_v(static_cast<Eigen::Index>(weighted_idx.size()));
    for (std::size_t j = 0; j < weighted_idx.size(); ++j) {
      inv_sqrt_v(static_cast<Eigen::Index>(j)) = 1.0 / std::sqrt(bundle[weighted_idx[j]].variance);
    }
    const Eigen::MatrixXd scaled = weighted_perp * inv_sqrt_v.asDiagonal();
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
    cod.setThreshold(kRankThreshold);
    cod.compute(scaled);
    const Eigen::VectorXd y = cod.solve(q_perp);
    c_weighted = inv_sqrt_v.cwiseProduct(y);
  }

  Eigen::VectorXd c_free = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(free_idx.size()));
  if (!free_idx.empty()) {
    const Eigen::VectorXd remainder = q - weighted * c_weighted;
    c_free = free_cod.solve(remainder);
  }

  std::vector<double> coefficients(bundle.size(), 0.0);
  for (std::size_t j = 0; j < weighted_idx.size(); ++j) {
    coefficients[weighted_idx[j]] = c_weighted(static_cast<Eigen::Index>(j));
  }
  for (std::size_t j = 0; j < free_idx.size(); ++j) {
    coefficients[free_idx[j]] = c_free(static_cast<Eigen::Index>(j));
  }

  Eigen::VectorXd reconstructed = -q;
  for (std::size_t i = 0; i < bundle.size(); ++i) {
    if (coefficients[i] == 0.0) continue;
    const auto qi = bundle[i].query.coefficients();
    for (std::size_t r = 0; r < n; ++r) reconstructed(static_cast<Eigen::Index>(r)) += coefficients[i] * qi[r];
  }

  DeterminacyCertificate cert;
  cert.residual_norm = reconstructed.norm();
  if (!(cert.residual_norm <= tolerance)) {
    cert.feasible = false;
    cert.min_variance = kInfinity;
    return cert;
  }

  double variance = 0.0;
  for (std::size_t j = 0; j < weighted_idx.size(); ++j) {
    const double c = c_weighted(static_cast<Eigen::Index>(j));
    variance += c * c * bundle[weighted_idx[j]].variance;
  }
  cert.feasible = true;
  cert.coefficients = std::move(coefficients);
  cert.min_variance = variance;
  return cert;
}

bool determines(std::span<const PricedQuery> bundle, const PricedQuery& target) {
  if (target.variance == 0.0) {
    // Only exact answers combine into an exact answer.
    QueryBundle exact;
    for (const auto& entry : bundle) {
      if (entry.variance == 0.0) exact.push_back(entry);
    }
    return min_variance(exact, target.query).feasible;
  }
  if (std::isinf(target.variance)) {
    // c^2 * inf <= inf: every entry may contribute, however noisy.
    QueryBundle any;
    for (const auto& entry : bundle) any.emplace_back(entry.query, 1.0);
    return min_variance(any, target.query).feasible;
  }
  const auto cert = min_variance(bundle, target.query);
  if (!cert.feasible) return false;
  return cert.min_variance <= target.variance * (1.0 + kVarianceTolerance);
}

double derive_answer(std::span<const double> answers, const DeterminacyCertificate& cert) {
  if (!cert.feasible) throw ValidationError("cannot derive an answer from an infeasible certificate");
  require_dimension(cert.coefficients.size(), answers.size(), "derive_answer");
  double sum = 0.0;
  for (std::size_t i = 0; i < answers.size(); ++i) sum += cert.coefficients[i] * answers[i];
  return sum;
}

}  // namespace dpmarket

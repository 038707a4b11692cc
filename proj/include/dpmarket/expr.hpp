#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <string_view>
#include <utility>
#include <vector>

#include "dpmarket/errors.hpp"

namespace dpmarket {

// Combinators f: (R+)^k -> R+ that are non-decreasing, subadditive and vanish
// at the origin. Composing them over arbitrage-free leaves keeps the result
// arbitrage-free; over compensating micro-payments they keep the result
// compensating. Atan, Tanh and AlgSigmoid carry an output scale k >= 0.
// GeoMean is representable but never validates: sqrt(a * b) is
// superadditive, e.g. sqrt(a * 0) + sqrt(0 * b) = 0 < sqrt(a * b).
enum class Combinator {
  kLeaf,
  kLinearComb,  // sum_j coeff_j * child_j, coeff_j >= 0
  kMax,
  kCutOff,      // min(child, cap), cap >= 0
  kPower,       // child^e, 0 < e <= 1
  kLog1p,       // log(1 + child)
  kGeoMean,     // sqrt(a * b)
  kAtan,        // k * atan(child)
  kTanh,        // k * tanh(child)
  kAlgSigmoid,  // k * child / sqrt(1 + child^2)
  kScaleOut,    // k * child
};

std::string_view combinator_name(Combinator c) noexcept;

// Scalar combinator semantics on the extended half-line [0, inf].
namespace combinators {

inline double product_or_zero(double coeff, double x) { return coeff == 0.0 ? 0.0 : coeff * x; }

inline double cutoff(double x, double cap) { return x < cap ? x : cap; }

inline double power(double x, double e) { return std::pow(x, e); }

inline double log1p(double x) { return std::log1p(x); }

inline double geomean(double a, double b) {
  // One side zero means no information was priced on that side: never overcharge.
  if (a == 0.0 || b == 0.0) return 0.0;
  return std::sqrt(a) * std::sqrt(b);
}

inline double atan(double x, double k) { return product_or_zero(k, std::atan(x)); }

inline double tanh(double x, double k) { return product_or_zero(k, std::tanh(x)); }

inline double alg_sigmoid(double x, double k) {
  const double s = std::isinf(x) ? 1.0 : x / std::hypot(1.0, x);
  return product_or_zero(k, s);
}

}  // namespace combinators

// Immutable expression tree of whitelisted combinators over leaves of type
// Leaf. Copies share structure.
template <class Leaf>
class SubadditiveExpr {
 public:
  struct Node {
    Combinator kind = Combinator::kLeaf;
    Leaf leaf{};
    std::vector<double> params;  // coefficients, cap, exponent or scale
    std::vector<SubadditiveExpr> children;
  };

  static SubadditiveExpr leaf(Leaf value) {
    Node node;
    node.leaf = std::move(value);
    return SubadditiveExpr(std::move(node));
  }

  static SubadditiveExpr linear_comb(std::vector<std::pair<double, SubadditiveExpr>> terms) {
    Node node;
    node.kind = Combinator::kLinearComb;
    for (auto& [coeff, child] : terms) {
      node.params.push_back(coeff);
      node.children.push_back(std::move(child));
    }
    return SubadditiveExpr(std::move(node));
  }

  static SubadditiveExpr max(std::vector<SubadditiveExpr> children) {
    Node node;
    node.kind = Combinator::kMax;
    node.children = std::move(children);
    return SubadditiveExpr(std::move(node));
  }

  static SubadditiveExpr cutoff(SubadditiveExpr child, double cap) {
    return unary(Combinator::kCutOff, std::move(child), cap);
  }
  static SubadditiveExpr power(SubadditiveExpr child, double exponent) {
    return unary(Combinator::kPower, std::move(child), exponent);
  }
  static SubadditiveExpr log1p(SubadditiveExpr child) {
    Node node;
    node.kind = Combinator::kLog1p;
    node.children.push_back(std::move(child));
    return SubadditiveExpr(std::move(node));
  }
  static SubadditiveExpr geomean(SubadditiveExpr a, SubadditiveExpr b) {
    Node node;
    node.kind = Combinator::kGeoMean;
    node.children.push_back(std::move(a));
    node.children.push_back(std::move(b));
    return SubadditiveExpr(std::move(node));
  }
  static SubadditiveExpr atan(SubadditiveExpr child, double scale = 1.0) {
    return unary(Combinator::kAtan, std::move(child), scale);
  }
  static SubadditiveExpr tanh(SubadditiveExpr child, double scale = 1.0) {
    return unary(Combinator::kTanh, std::move(child), scale);
  }
  static SubadditiveExpr alg_sigmoid(SubadditiveExpr child, double scale = 1.0) {
    return unary(Combinator::kAlgSigmoid, std::move(child), scale);
  }
  static SubadditiveExpr scale_out(SubadditiveExpr child, double k) {
    return unary(Combinator::kScaleOut, std::move(child), k);
  }

  // Only for nodes built by the factories above; never empty otherwise.
  const Node& node() const { return *node_; }
  Combinator kind() const { return node_->kind; }

  // Evaluates bottom-up; `leaf_value(const Leaf&)` supplies leaf values in [0, inf].
  template <class LeafFn>
  double evaluate(LeafFn&& leaf_value) const {
    const Node& n = *node_;
    switch (n.kind) {
      case Combinator::kLeaf:
        return leaf_value(n.leaf);
      case Combinator::kLinearComb: {
        double sum = 0.0;
        for (std::size_t j = 0; j < n.children.size(); ++j) {
          if (n.params[j] == 0.0) continue;
          sum += n.params[j] * n.children[j].evaluate(leaf_value);
        }
        return sum;
      }
      case Combinator::kMax: {
        double best = 0.0;
        for (const auto& child : n.children) best = std::max(best, child.evaluate(leaf_value));
        return best;
      }
      case Combinator::kCutOff:
        return combinators::cutoff(n.children[0].evaluate(leaf_value), n.params[0]);
      case Combinator::kPower:
        return combinators::power(n.children[0].evaluate(leaf_value), n.params[0]);
      case Combinator::kLog1p:
        return combinators::log1p(n.children[0].evaluate(leaf_value));
      case Combinator::kGeoMean:
        return combinators::geomean(n.children[0].evaluate(leaf_value),
                                    n.children[1].evaluate(leaf_value));
      case Combinator::kAtan:
        return combinators::atan(n.children[0].evaluate(leaf_value), n.params[0]);
      case Combinator::kTanh:
        return combinators::tanh(n.children[0].evaluate(leaf_value), n.params[0]);
      case Combinator::kAlgSigmoid:
        return combinators::alg_sigmoid(n.children[0].evaluate(leaf_value), n.params[0]);
      case Combinator::kScaleOut:
        return combinators::product_or_zero(n.params[0], n.children[0].evaluate(leaf_value));
    }
    return 0.0;
  }

  // True iff every node's parameters are in range and every leaf passes
  // `leaf_ok(const Leaf&)`.
  template <class LeafFn>
  bool validate(LeafFn&& leaf_ok) const {
    const Node& n = *node_;
    auto finite_nonneg = [](double x) { return std::isfinite(x) && x >= 0.0; };
    switch (n.kind) {
      case Combinator::kLeaf:
        return leaf_ok(n.leaf);
      case Combinator::kLinearComb:
        if (n.children.empty() || n.params.size() != n.children.size()) return false;
        for (double c : n.params) {
          if (!finite_nonneg(c)) return false;
        }
        break;
      case Combinator::kMax:
        if (n.children.empty()) return false;
        break;
      case Combinator::kCutOff:
      case Combinator::kAtan:
      case Combinator::kTanh:
      case Combinator::kAlgSigmoid:
      case Combinator::kScaleOut:
        if (n.children.size() != 1 || n.params.size() != 1 || !finite_nonneg(n.params[0])) return false;
        break;
      case Combinator::kPower:
        if (n.children.size() != 1 || n.params.size() != 1) return false;
        if (!(n.params[0] > 0.0 && n.params[0] <= 1.0)) return false;
        break;
      case Combinator::kLog1p:
        if (n.children.size() != 1) return false;
        break;
      case Combinator::kGeoMean:
        return false;
    }
    for (const auto& child : n.children) {
      if (!child.validate(leaf_ok)) return false;
    }
    return true;
  }

  // Rebuilds the tree with every leaf replaced by `substitute(const Leaf&)`,
  // which returns a SubadditiveExpr<Other>.
  template <class Other, class LeafFn>
  SubadditiveExpr<Other> substitute(LeafFn&& substitute_leaf) const {
    using Out = SubadditiveExpr<Other>;
    const Node& n = *node_;
    if (n.kind == Combinator::kLeaf) return substitute_leaf(n.leaf);
    typename Out::Node out;
    out.kind = n.kind;
    out.params = n.params;
    for (const auto& child : n.children) {
      out.children.push_back(child.template substitute<Other>(substitute_leaf));
    }
    return Out::from_node(std::move(out));
  }

  template <class Fn>
  void for_each_leaf(Fn&& fn) const {
    if (node_->kind == Combinator::kLeaf) {
      fn(node_->leaf);
      return;
    }
    for (const auto& child : node_->children) child.for_each_leaf(fn);
  }

  // Escape hatch for deserializers; the node is not validated.
  static SubadditiveExpr from_node(Node node) { return SubadditiveExpr(std::move(node)); }

 private:
  explicit SubadditiveExpr(Node node) : node_(std::make_shared<const Node>(std::move(node))) {}

  static SubadditiveExpr unary(Combinator kind, SubadditiveExpr child, double param) {
    Node node;
    node.kind = kind;
    node.params.push_back(param);
    node.children.push_back(std::move(child));
    return SubadditiveExpr(std::move(node));
  }

  std::shared_ptr<const Node> node_;
};

inline std::string_view combinator_name(Combinator c) noexcept {
  switch (c) {
    case Combinator::kLeaf: return "leaf";
    case Combinator::kLinearComb: return "lincomb";
    case Combinator::kMax: return "max";
    case Combinator::kCutOff: return "cutoff";
    case Combinator::kPower: return "power";
    case Combinator::kLog1p: return "log1p";
    case Combinator::kGeoMean: return "geomean";
    case Combinator::kAtan: return "atan";
    case Combinator::kTanh: return "tanh";
    case Combinator::kAlgSigmoid: return "alg_sigmoid";
    case Combinator::kScaleOut: return "scale";
  }
  return "?";
}

}  // namespace dpmarket

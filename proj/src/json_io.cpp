#include "dpmarket/json_io.hpp"

#include <cmath>
#include <string>

#include "dpmarket/errors.hpp"

namespace dpmarket::io {
namespace {

[[noreturn]] void fail(const std::string& what) { throw ValidationError(what); }

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) fail(std::string("missing field '") + key + "'");
  return j.at(key);
}

double number(const json& j, const char* what) {
  if (!j.is_number()) fail(std::string("expected a number for ") + what);
  return j.get<double>();
}

double optional_number(const json& j, const char* key, double fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return number(j.at(key), key);
}

template <class Leaf, class LeafToJson>
json expr_to_json(const SubadditiveExpr<Leaf>& expr, LeafToJson&& leaf_to_json) {
  const auto& node = expr.node();
  auto child = [&](std::size_t k) { return expr_to_json(node.children[k], leaf_to_json); };
  switch (node.kind) {
    case Combinator::kLeaf:
      return leaf_to_json(node.leaf);
    case Combinator::kLinearComb: {
      json terms = json::array();
      for (std::size_t k = 0; k < node.children.size(); ++k) terms.push_back(json::array({node.params[k], child(k)}));
      return {{"lincomb", terms}};
    }
    case Combinator::kMax: {
      json children = json::array();
      for (std::size_t k = 0; k < node.children.size(); ++k) children.push_back(child(k));
      return {{"max", children}};
    }
    case Combinator::kCutOff:
      return {{"cutoff", {{"cap", node.params[0]}, {"inner", child(0)}}}};
    case Combinator::kPower:
      return {{"power", {{"exponent", node.params[0]}, {"inner", child(0)}}}};
    case Combinator::kLog1p:
      return {{"log1p", child(0)}};
    case Combinator::kGeoMean:
      return {{"geomean", json::array({child(0), child(1)})}};
    case Combinator::kAtan:
    case Combinator::kTanh:
    case Combinator::kAlgSigmoid:
      return {{std::string(combinator_name(node.kind)), {{"scale", node.params[0]}, {"inner", child(0)}}}};
    case Combinator::kScaleOut:
      return {{"scale", {{"k", node.params[0]}, {"inner", child(0)}}}};
  }
  fail("unknown combinator");
}

// Parses combinators; `parse_leaf` returns nullopt-equivalent by throwing
// for unknown keys.
template <class Leaf, class LeafFromJson>
SubadditiveExpr<Leaf> expr_from_json(const json& j, LeafFromJson&& parse_leaf) {
  using Expr = SubadditiveExpr<Leaf>;
  if (!j.is_object() || j.size() != 1) fail("expression nodes are single-key objects");
  const std::string key = j.begin().key();
  const json& body = j.begin().value();
  auto sub = [&](const json& e) { return expr_from_json<Leaf>(e, parse_leaf); };

  if (key == "lincomb") {
    if (!body.is_array() || body.empty()) fail("lincomb needs a non-empty array of [coeff, expr] pairs");
    std::vector<std::pair<double, Expr>> terms;
    for (const auto& term : body) {
      if (!term.is_array() || term.size() != 2) fail("lincomb terms are [coeff, expr] pairs");
      terms.emplace_back(number(term[0], "lincomb coefficient"), sub(term[1]));
    }
    return Expr::linear_comb(std::move(terms));
  }
  if (key == "max") {
    if (!body.is_array() || body.empty()) fail("max needs a non-empty array");
    std::vector<Expr> children;
    for (const auto& e : body) children.push_back(sub(e));
    return Expr::max(std::move(children));
  }
  if (key == "cutoff") return Expr::cutoff(sub(field(body, "inner")), number(field(body, "cap"), "cap"));
  if (key == "power") {
    return Expr::power(sub(field(body, "inner")), number(field(body, "exponent"), "exponent"));
  }
  if (key == "log1p") return Expr::log1p(sub(body));
  if (key == "geomean") {
    if (!body.is_array() || body.size() != 2) fail("geomean takes exactly two expressions");
    return Expr::geomean(sub(body[0]), sub(body[1]));
  }
  if (key == "atan") return Expr::atan(sub(field(body, "inner")), optional_number(body, "scale", 1.0));
  if (key == "tanh") return Expr::tanh(sub(field(body, "inner")), optional_number(body, "scale", 1.0));
  if (key == "alg_sigmoid") {
    return Expr::alg_sigmoid(sub(field(body, "inner")), optional_number(body, "scale", 1.0));
  }
  if (key == "scale") return Expr::scale_out(sub(field(body, "inner")), number(field(body, "k"), "k"));
  return parse_leaf(key, body);
}

json seminorm_to_json(const SemiNorm& f) {
  switch (f.kind) {
    case SemiNorm::Kind::kL2:
      return {{"base", "l2"}};
    case SemiNorm::Kind::kLinf:
      return {{"base", "linf"}};
    case SemiNorm::Kind::kLp:
      return {{"base", {{"lp", f.p}}}};
    case SemiNorm::Kind::kWeightedL2:
      return {{"base", {{"weighted_l2", f.dense_weights()}}}};
  }
  fail("unknown semi-norm");
}

PriceExpr parse_price_leaf(const std::string& key, const json& body) {
  if (key != "base") fail("unknown price expression node '" + key + "'");
  if (body.is_string()) {
    const auto name = body.get<std::string>();
    if (name == "l2") return PriceExpr::leaf(SemiNorm::l2());
    if (name == "linf") return PriceExpr::leaf(SemiNorm::linf());
    fail("unknown semi-norm '" + name + "'");
  }
  if (body.is_object() && body.contains("lp")) return PriceExpr::leaf(SemiNorm::lp(number(body.at("lp"), "lp")));
  if (body.is_object() && body.contains("weighted_l2")) {
    const auto& w = body.at("weighted_l2");
    if (!w.is_array()) fail("weighted_l2 expects an array of weights");
    std::vector<double> dense;
    for (const auto& x : w) dense.push_back(number(x, "weight"));
    return PriceExpr::leaf(SemiNorm::weighted_l2(dense));
  }
  fail("unknown semi-norm specification");
}

Contract parse_contract_leaf(const std::string& key, const json& body) {
  if (key == "linear") return Contract::leaf({number(field(body, "c"), "c")});
  ContractOptions options;
  if (key == "option_a") {
    options.knee = optional_number(body, "knee", options.knee);
    options.a_scale = optional_number(body, "scale", options.a_scale);
    if (!(options.knee > 0.0)) fail("option_a knee must be positive");
    return option_a(options);
  }
  if (key == "option_b") {
    options.knee = optional_number(body, "knee", options.knee);
    options.b_bound = optional_number(body, "bound", options.b_bound);
    if (!(options.knee > 0.0)) fail("option_b knee must be positive");
    return option_b(options);
  }
  fail("unknown contract node '" + key + "'");
}

}  // namespace

json extended_to_json(double x) {
  if (std::isinf(x) && x > 0) return "inf";
  return x;
}

double extended_from_json(const json& j, const char* what) {
  if (j.is_string() && j.get<std::string>() == "inf") return kInfinity;
  return number(j, what);
}

double number_field(const json& j, const char* key) { return number(field(j, key), key); }

json to_json(const LinearQuery& q) { return json(std::vector<double>(q.coefficients().begin(), q.coefficients().end())); }

LinearQuery query_from_json(const json& j) {
  if (!j.is_array()) fail("a query is a JSON array of numbers");
  std::vector<double> q;
  q.reserve(j.size());
  for (const auto& x : j) q.push_back(number(x, "query coefficient"));
  return LinearQuery(std::move(q));
}

json to_json(const PricedQuery& q) { return {{"q", to_json(q.query)}, {"v", extended_to_json(q.variance)}}; }

PricedQuery priced_query_from_json(const json& j) {
  return PricedQuery(query_from_json(field(j, "q")), extended_from_json(field(j, "v"), "v"));
}

json to_json(const PriceExpr& expr) { return expr_to_json(expr, seminorm_to_json); }

PriceExpr price_expr_from_json(const json& j) { return expr_from_json<SemiNorm>(j, parse_price_leaf); }

json to_json(const Contract& contract) {
  return expr_to_json(contract, [](const LinearContract& leaf) -> json { return {{"linear", {{"c", leaf.c}}}}; });
}

Contract contract_from_json(const json& j) { return expr_from_json<LinearContract>(j, parse_contract_leaf); }

json to_json(const DeterminacyCertificate& cert) {
  return {{"feasible", cert.feasible},
          {"coefficients", cert.coefficients},
          {"min_variance", extended_to_json(cert.min_variance)},
          {"residual_norm", cert.residual_norm}};
}

}  // namespace dpmarket::io

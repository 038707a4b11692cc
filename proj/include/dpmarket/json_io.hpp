#pragma once

#include <json.hpp>

#include "dpmarket/determinacy.hpp"
#include "dpmarket/payments.hpp"
#include "dpmarket/pricing.hpp"
#include "dpmarket/query.hpp"

namespace dpmarket::io {

using json = nlohmann::json;

// Extended reals: numbers, with +inf written as the string "inf".
json extended_to_json(double x);
double extended_from_json(const json& j, const char* what);

json to_json(const LinearQuery& q);
LinearQuery query_from_json(const json& j);

// {"q":[...],"v":number|"inf"}
json to_json(const PricedQuery& q);
PricedQuery priced_query_from_json(const json& j);

// {"atan":{"scale":6366.2,"inner":{"lincomb":[[7.85e-4,{"base":"l2"}]]}}}
json to_json(const PriceExpr& expr);
PriceExpr price_expr_from_json(const json& j);

// {"linear":{"c":0.01}}, combinators as for prices, and the presets
// {"option_a":{"knee":..,"scale":..}} / {"option_b":{"knee":..,"bound":..}}.
json to_json(const Contract& contract);
Contract contract_from_json(const json& j);

json to_json(const DeterminacyCertificate& cert);

// Reads `key` from an object, throwing ValidationError when absent or of the
// wrong type.
double number_field(const json& j, const char* key);

}  // namespace dpmarket::io

#include "dpmarket/market.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>

#include "dpmarket/errors.hpp"
#include "dpmarket/json_io.hpp"

namespace dpmarket {
namespace {

using nlohmann::json;

constexpr double kConservationTolerance = 1e-9;

double conservation_slack(double amount) { return kConservationTolerance * std::max(1.0, std::abs(amount)); }

bool non_negative_integer(const json& j) {
  return j.is_number_unsigned() || (j.is_number_integer() && j.get<std::int64_t>() >= 0);
}

std::string format_utc(std::int64_t epoch_seconds) {
  const std::time_t t = static_cast<std::time_t>(epoch_seconds);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Database database_from(std::vector<double> values, double gamma, std::size_t n) {
  require_dimension(n, values.size(), "database");
  return Database(std::move(values), gamma);
}

// Expected price and payments in private mode, extended to v = 0 and v = inf
// by their limits so they can be fuzzed like any other price.
double expected_or_limit(const PricedQuery& q, const std::function<double(const PricedQuery&)>& f) {
  if (std::isinf(q.variance)) return 0.0;
  if (q.variance == 0.0) {
    const PricedQuery unit(q.query, 1.0);
    return f(unit) == 0.0 ? 0.0 : kInfinity;
  }
  return f(q);
}

}  // namespace

std::vector<double> load_database_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open database file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  std::vector<double> values;
  if (first != std::string::npos && text[first] == '[') {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw ValidationError("database file " + path.string() + ": " + e.what());
    }
    for (const auto& x : j) {
      if (!x.is_number()) throw ValidationError("database file entries must be numbers");
      values.push_back(x.get<double>());
    }
    return values;
  }
  std::string token;
  std::string normalized = text;
  for (char& ch : normalized) {
    if (ch == ',' || ch == ';') ch = ' ';
  }
  std::istringstream tokens(normalized);
  while (tokens >> token) {
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size()) throw ValidationError("database file: '" + token + "' is not a number");
    values.push_back(value);
  }
  return values;
}

MarketConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ValidationError("market config must be a JSON object");
  MarketConfig config;
  const double n = io::number_field(j, "n");
  if (!(n >= 1.0) || n != std::floor(n)) throw ValidationError("n must be a positive integer");
  config.n = static_cast<std::size_t>(n);
  config.domain_bound = io::number_field(j, "domain_bound");
  if (!(config.domain_bound > 0.0) || !std::isfinite(config.domain_bound)) {
    throw ValidationError("domain_bound must be positive");
  }

  if (!j.contains("owners") || !j.at("owners").is_array()) throw ValidationError("missing owners array");
  for (const auto& o : j.at("owners")) {
    if (!o.contains("owner") || !o.at("owner").is_string()) throw ValidationError("owner entries need an 'owner' id");
    auto id = o.at("owner").get<std::string>();
    if (!o.contains("items") || !o.at("items").is_array()) throw ValidationError("owner " + id + " lists no items");
    std::vector<std::size_t> items;
    for (const auto& item : o.at("items")) {
      if (!non_negative_integer(item)) throw ValidationError("item indices must be non-negative integers");
      items.push_back(item.get<std::size_t>());
    }
    if (!o.contains("contract")) throw ValidationError("owner " + id + " has no contract");
    auto contract = io::contract_from_json(o.at("contract"));
    config.owners.push_back(Owner{std::move(id), std::move(items), std::move(contract)});
  }

  if (j.contains("price")) {
    const auto& p = j.at("price");
    if (p.is_string() && p.get<std::string>() == "synthesize") {
      config.markup = 1.0;
    } else if (p.is_object() && p.contains("synthesize")) {
      config.markup = p.at("synthesize").is_object() && p.at("synthesize").contains("markup")
                          ? io::number_field(p.at("synthesize"), "markup")
                          : 1.0;
    } else {
      config.price = io::price_expr_from_json(p);
    }
  }

  if (j.contains("noise")) {
    if (!j.at("noise").is_string() || j.at("noise").get<std::string>() != "laplace") {
      throw ValidationError("only \"laplace\" noise is supported");
    }
  }
  if (j.contains("seed")) {
    if (!non_negative_integer(j.at("seed"))) throw ValidationError("seed must be a non-negative 64-bit integer");
    config.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("private_valuations")) {
    const auto& pv = j.at("private_valuations");
    config.private_valuations = PrivateValuationSettings{io::number_field(pv, "delta"), io::number_field(pv, "b_prime")};
  }

  if (j.contains("database")) {
    std::vector<double> values;
    for (const auto& x : j.at("database")) {
      if (!x.is_number()) throw ValidationError("database entries must be numbers");
      values.push_back(x.get<double>());
    }
    config.database = database_from(std::move(values), config.domain_bound, config.n);
  } else if (j.contains("database_file")) {
    std::filesystem::path file = j.at("database_file").get<std::string>();
    if (file.is_relative()) file = base_dir / file;
    config.database = database_from(load_database_values(file), config.domain_bound, config.n);
  }

  // Surface semantic errors (ownership, contracts, price) at load time.
  Market check(config);
  return config;
}

MarketConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("config " + path.string() + ": " + e.what());
  }
  return parse_config(j, path.parent_path());
}

Market::Market(MarketConfig config)
    : config_(std::move(config)), price_(PriceExpr::leaf(SemiNorm::l2())) {
  const std::size_t n = config_.n;
  if (n == 0) throw ValidationError("market needs at least one item");
  if (config_.database) require_dimension(n, config_.database->size(), "database");

  constexpr std::size_t kUnowned = static_cast<std::size_t>(-1);
  item_owner_.assign(n, kUnowned);
  for (std::size_t o = 0; o < config_.owners.size(); ++o) {
    const auto& owner = config_.owners[o];
    if (!validate(owner.contract)) throw ValidationError("contract of owner " + owner.id + " failed validation");
    for (std::size_t item : owner.items) {
      if (item >= n) throw ValidationError("owner " + owner.id + " claims item " + std::to_string(item) + " >= n");
      if (item_owner_[item] != kUnowned) {
        throw ValidationError("item " + std::to_string(item) + " has more than one owner");
      }
      item_owner_[item] = o;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (item_owner_[i] == kUnowned) throw ValidationError("item " + std::to_string(i) + " has no owner");
  }

  contracts_.reserve(n);
  rules_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    contracts_.push_back(config_.owners[item_owner_[i]].contract);
    rules_.push_back(rule_for_contract(contracts_.back(), config_.domain_bound));
  }

  if (config_.private_valuations) {
    std::vector<double> constants;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& node = contracts_[i].node();
      if (node.kind != Combinator::kLeaf) {
        throw ValidationError("private valuations require linear contracts (owner " +
                              config_.owners[item_owner_[i]].id + ")");
      }
      constants.push_back(node.leaf.c);
    }
    profile_.emplace(std::move(constants), config_.private_valuations->delta, config_.private_valuations->b_prime);
  }

  if (config_.price) {
    if (!validate(*config_.price)) throw ValidationError("price expression failed validation");
    price_ = *config_.price;
  } else {
    if (!(config_.markup >= 1.0) || !std::isfinite(config_.markup)) {
      throw ValidationError("synthesized price markup must be at least 1");
    }
    price_ = synthesize_price(rules_);
    if (config_.markup != 1.0) price_ = PriceExpr::scale_out(price_, config_.markup);
  }
}

void Market::check_query(const PricedQuery& query) const { require_dimension(size(), query.size(), "query"); }

double Market::quote(const PricedQuery& query) const {
  check_query(query);
  if (profile_) return expected_price(query, *profile_, gamma());
  return price(price_, query);
}

std::vector<double> Market::item_payments(const PricedQuery& query) const {
  check_query(query);
  std::vector<double> out(size());
  for (std::size_t i = 0; i < size(); ++i) out[i] = micropayment(rules_[i], query, i);
  return out;
}

std::vector<double> Market::owner_totals(const std::vector<double>& item_amounts) const {
  require_dimension(size(), item_amounts.size(), "owner_totals");
  std::vector<double> totals(config_.owners.size(), 0.0);
  for (std::size_t i = 0; i < size(); ++i) totals[item_owner_[i]] += item_amounts[i];
  return totals;
}

json LedgerEntry::to_json() const {
  json payments_json = json::array();
  for (const auto& [owner, amount] : payments) payments_json.push_back({{"owner", owner}, {"amount", amount}});
  auto optional_u64 = [](const std::optional<std::uint64_t>& x) { return x ? json(*x) : json(nullptr); };
  json j;
  j["seq"] = sequence;
  j["timestamp"] = timestamp;
  j["kind"] = kind == Kind::kPurchase ? "purchase" : "price_probe";
  j["mode"] = private_mode ? "private" : "standard";
  j["query"] = {{"q", q}, {"v", io::extended_to_json(v)}};
  j["price"] = price;
  j["answer"] = answer ? json(*answer) : json(nullptr);
  j["seed"] = seed;
  j["answer_draw"] = optional_u64(answer_draw);
  j["price_draw"] = optional_u64(price_draw);
  j["payments"] = std::move(payments_json);
  j["margin"] = margin;
  return j;
}

LedgerEntry LedgerEntry::from_json(const json& j) {
  LedgerEntry e;
  e.sequence = j.at("seq").get<std::uint64_t>();
  e.timestamp = j.at("timestamp").get<std::string>();
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "purchase") {
    e.kind = Kind::kPurchase;
  } else if (kind == "price_probe") {
    e.kind = Kind::kPriceProbe;
  } else {
    throw std::invalid_argument("unknown entry kind '" + kind + "'");
  }
  const auto mode = j.at("mode").get<std::string>();
  if (mode != "standard" && mode != "private") throw std::invalid_argument("unknown mode '" + mode + "'");
  e.private_mode = mode == "private";
  e.q = j.at("query").at("q").get<std::vector<double>>();
  e.v = io::extended_from_json(j.at("query").at("v"), "v");
  e.price = j.at("price").get<double>();
  if (!j.at("answer").is_null()) e.answer = j.at("answer").get<double>();
  e.seed = j.at("seed").get<std::uint64_t>();
  if (!j.at("answer_draw").is_null()) e.answer_draw = j.at("answer_draw").get<std::uint64_t>();
  if (!j.at("price_draw").is_null()) e.price_draw = j.at("price_draw").get<std::uint64_t>();
  for (const auto& p : j.at("payments")) {
    e.payments.emplace_back(p.at("owner").get<std::string>(), p.at("amount").get<double>());
  }
  e.margin = j.at("margin").get<double>();
  return e;
}

std::vector<LedgerEntry> parse_ledger(const std::string& jsonl) {
  std::vector<LedgerEntry> entries;
  std::istringstream lines(jsonl);
  std::string line;
  long long line_no = 0;
  while (std::getline(lines, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const long long id = static_cast<long long>(entries.size());
    try {
      entries.push_back(LedgerEntry::from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw IntegrityError(id, std::string("unreadable (line ") + std::to_string(line_no + 1) + "): " + e.what());
    }
    if (entries.back().sequence != static_cast<std::uint64_t>(id)) {
      throw IntegrityError(id, "sequence number " + std::to_string(entries.back().sequence) + " out of order");
    }
    ++line_no;
  }
  return entries;
}

Ledger::Ledger(std::filesystem::path file) : file_(std::move(file)) {
  if (!std::filesystem::exists(*file_)) return;
  std::ifstream in(*file_);
  if (!in) throw IntegrityError(-1, "cannot read ledger " + file_->string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  entries_ = parse_ledger(buffer.str());
}

std::uint64_t Ledger::next_draw() const noexcept {
  std::uint64_t next = 0;
  for (const auto& e : entries_) {
    if (e.answer_draw) next = std::max(next, *e.answer_draw + 1);
    if (e.price_draw) next = std::max(next, *e.price_draw + 1);
  }
  return next;
}

void Ledger::append(LedgerEntry entry) {
  if (entry.sequence != next_sequence()) throw IntegrityError(static_cast<long long>(entry.sequence), "appended out of order");
  if (file_) {
    std::ofstream out(*file_, std::ios::app);
    if (!out) throw IntegrityError(static_cast<long long>(entry.sequence), "cannot append to " + file_->string());
    out << entry.to_json().dump() << '\n';
    out.flush();
    if (!out) throw IntegrityError(static_cast<long long>(entry.sequence), "write failed");
  }
  entries_.push_back(std::move(entry));
}

std::string Ledger::serialize() const {
  std::string out;
  for (const auto& e : entries_) {
    out += e.to_json().dump();
    out += '\n';
  }
  return out;
}

Clock system_clock() {
  return [](std::uint64_t) {
    const auto now = std::chrono::system_clock::now();
    return format_utc(std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count());
  };
}

Clock logical_clock(std::int64_t start_epoch_seconds) {
  return [start_epoch_seconds](std::uint64_t sequence) {
    return format_utc(start_epoch_seconds + static_cast<std::int64_t>(sequence));
  };
}

MarketSession::MarketSession(const Market& market, Ledger& ledger, Clock clock)
    : market_(market), ledger_(ledger), clock_(std::move(clock)), noise_(market.config().seed, ledger.next_draw()) {
  for (const auto& e : ledger.entries()) {
    if (e.seed != market.config().seed) {
      throw IntegrityError(static_cast<long long>(e.sequence), "recorded seed differs from the market seed");
    }
  }
}

LedgerEntry MarketSession::start_entry(const PricedQuery& query, LedgerEntry::Kind kind) const {
  LedgerEntry entry;
  entry.sequence = ledger_.next_sequence();
  entry.timestamp = clock_(entry.sequence);
  entry.kind = kind;
  entry.private_mode = market_.private_mode();
  entry.q.assign(query.query.coefficients().begin(), query.query.coefficients().end());
  entry.v = query.variance;
  entry.seed = noise_.seed();
  return entry;
}

double MarketSession::quote(const PricedQuery& query) {
  market_.check_query(query);
  if (!market_.private_mode()) return market_.quote(query);
  if (query.variance == 0.0 || std::isinf(query.variance)) {
    throw RefusedPurchase("private-valuation prices need 0 < v < inf");
  }
  LedgerEntry entry = start_entry(query, LedgerEntry::Kind::kPriceProbe);
  entry.price_draw = noise_.next_draw();
  entry.price = noisy_price(query, *market_.profile(), market_.gamma(), noise_);
  entry.margin = 0.0;
  const double realized = entry.price;
  ledger_.append(std::move(entry));
  return realized;
}

PurchaseResult MarketSession::purchase(const PricedQuery& query) {
  market_.check_query(query);
  if (std::isinf(query.variance)) throw RefusedPurchase("a query with infinite variance carries no information");
  const auto& db = market_.config().database;
  if (!db) throw ValidationError("the market has no database loaded");

  LedgerEntry entry = start_entry(query, LedgerEntry::Kind::kPurchase);
  const auto& owners = market_.config().owners;
  std::vector<double> owner_amounts;

  if (market_.private_mode()) {
    if (query.variance == 0.0) throw RefusedPurchase("private-valuation markets cannot sell the exact answer");
    entry.price_draw = noise_.next_draw();
    entry.price = noisy_price(query, *market_.profile(), market_.gamma(), noise_);
    owner_amounts =
        market_.owner_totals(micropayments_general(query, *market_.profile(), market_.gamma(), entry.price));
    entry.margin = 0.0;
  } else {
    const double quoted = market_.quote(query);
    if (std::isinf(quoted)) {
      throw RefusedPurchase("the price of this query is infinite (exact answer under an unbounded price)");
    }
    owner_amounts = market_.owner_totals(market_.item_payments(query));
    double paid = 0.0;
    for (double a : owner_amounts) paid += a;
    const double margin = quoted - paid;
    if (margin < -conservation_slack(quoted)) {
      throw RefusedPurchase("the configured price does not cover the owners' micro-payments");
    }
    entry.price = quoted;
    entry.margin = margin;
  }

  entry.answer_draw = noise_.next_draw();
  entry.answer = answer(query, *db, noise_);
  for (std::size_t o = 0; o < owners.size(); ++o) entry.payments.emplace_back(owners[o].id, owner_amounts[o]);

  PurchaseResult result{*entry.answer, entry};
  ledger_.append(std::move(entry));
  return result;
}

PayoutSummary payouts(const std::vector<LedgerEntry>& entries, const std::vector<std::string>& owners) {
  PayoutSummary summary;
  for (const auto& id : owners) summary.per_owner[id] = 0.0;
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& e = entries[k];
    const auto id = static_cast<long long>(k);
    if (e.sequence != k) throw IntegrityError(id, "sequence number out of order");
    if (e.kind == LedgerEntry::Kind::kPriceProbe) {
      ++summary.price_probes;
      continue;
    }
    if (!std::isfinite(e.price) || !std::isfinite(e.margin)) throw IntegrityError(id, "non-finite price or margin");
    double paid = 0.0;
    for (const auto& [owner, amount] : e.payments) {
      if (!std::isfinite(amount)) throw IntegrityError(id, "non-finite payment to " + owner);
      if (!e.private_mode && amount < 0.0) throw IntegrityError(id, "negative payment to " + owner);
      paid += amount;
    }
    if (std::abs(e.price - (paid + e.margin)) > conservation_slack(e.price)) {
      throw IntegrityError(id, "price does not equal payments plus margin");
    }
    if (e.private_mode ? e.margin != 0.0 : e.margin < -conservation_slack(e.price)) {
      throw IntegrityError(id, "margin violates the balance requirement");
    }
    for (const auto& [owner, amount] : e.payments) summary.per_owner[owner] += amount;
    summary.revenue += e.price;
    summary.paid += paid;
    summary.margin += e.margin;
    ++summary.purchases;
  }
  return summary;
}

double replay_answer(const LedgerEntry& entry, const Database& x) {
  if (entry.kind != LedgerEntry::Kind::kPurchase || !entry.answer_draw) {
    throw IntegrityError(static_cast<long long>(entry.sequence), "entry has no answer to replay");
  }
  NoiseSource noise(entry.seed, *entry.answer_draw);
  return answer(PricedQuery(LinearQuery(entry.q), entry.v), x, noise);
}

std::size_t MarketFuzzReport::violation_count() const {
  std::size_t total = price.violations.size();
  for (const auto& r : items) total += r.violations.size();
  return total;
}

MarketFuzzReport fuzz_arbitrage(const Market& market, const PriceFn& price_fn, std::size_t trials,
                                std::mt19937_64& rng) {
  std::vector<PriceFn> fns;
  fns.push_back(price_fn);
  for (std::size_t i = 0; i < market.size(); ++i) {
    if (market.private_mode()) {
      fns.emplace_back([&market, i](const PricedQuery& q) {
        return expected_or_limit(q, [&](const PricedQuery& x) {
          return expected_compensation(x, *market.profile(), market.gamma(), i);
        });
      });
    } else {
      fns.emplace_back([&market, i](const PricedQuery& q) { return micropayment(market.rules()[i], q, i); });
    }
  }
  InstanceGenerator generator(market.size(), rng);
  auto reports = fuzz_prices(fns, trials, generator);
  MarketFuzzReport out;
  out.price = std::move(reports.front());
  out.items.assign(std::make_move_iterator(reports.begin() + 1), std::make_move_iterator(reports.end()));
  return out;
}

MarketFuzzReport fuzz_arbitrage(const Market& market, std::size_t trials, std::mt19937_64& rng) {
  if (market.private_mode()) {
    return fuzz_arbitrage(
        market,
        [&market](const PricedQuery& q) {
          return expected_or_limit(q, [&](const PricedQuery& x) { return market.quote(x); });
        },
        trials, rng);
  }
  return fuzz_arbitrage(market, as_price_fn(market.price_expr()), trials, rng);
}

}  // namespace dpmarket

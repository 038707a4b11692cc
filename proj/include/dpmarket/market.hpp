#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "dpmarket/fuzz.hpp"
#include "dpmarket/payments.hpp"
#include "dpmarket/pricing.hpp"
#include "dpmarket/privacy.hpp"
#include "dpmarket/query.hpp"
#include "dpmarket/valuation.hpp"

namespace dpmarket {

struct Owner {
  std::string id;
  std::vector<std::size_t> items;
  Contract contract;
};

struct PrivateValuationSettings {
  double delta = 0.0;
  double b_prime = 0.0;
};

struct MarketConfig {
  std::size_t n = 0;
  double domain_bound = 1.0;
  std::vector<Owner> owners;
  // Either a configured expression or sum_i mu_i scaled by `markup` >= 1.
  std::optional<PriceExpr> price;
  double markup = 1.0;
  NoiseSpec::Kind noise = NoiseSpec::Kind::kLaplace;
  std::uint64_t seed = 0;
  std::optional<PrivateValuationSettings> private_valuations;
  std::optional<Database> database;
};

// Parses the JSON config. Relative `database_file` paths resolve against
// `base_dir`. Throws ValidationError on any contract violation, including an
// ownership map that does not partition the items and b_prime <= delta.
MarketConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
MarketConfig load_config(const std::filesystem::path& path);

// Reads a database as a JSON array or as comma/whitespace separated numbers.
std::vector<double> load_database_values(const std::filesystem::path& path);

// Validated market: resolved price expression and per-item micro-payment
// rules. Immutable and safe to share between threads.
class Market {
 public:
  explicit Market(MarketConfig config);

  const MarketConfig& config() const noexcept { return config_; }
  std::size_t size() const noexcept { return config_.n; }
  double gamma() const noexcept { return config_.domain_bound; }
  bool private_mode() const noexcept { return profile_.has_value(); }

  const PriceExpr& price_expr() const noexcept { return price_; }
  const std::vector<MicroPaymentRule>& rules() const noexcept { return rules_; }
  const std::vector<Contract>& item_contracts() const noexcept { return contracts_; }
  const std::vector<std::size_t>& item_owner() const noexcept { return item_owner_; }
  const std::optional<ValuationProfile>& profile() const noexcept { return profile_; }

  void check_query(const PricedQuery& query) const;

  // Deterministic price in standard mode; the expected price in private mode.
  double quote(const PricedQuery& query) const;

  // mu_i for every item (standard mode).
  std::vector<double> item_payments(const PricedQuery& query) const;

  // Sums item amounts per owner, in owner order.
  std::vector<double> owner_totals(const std::vector<double>& item_amounts) const;

 private:
  MarketConfig config_;
  PriceExpr price_;
  std::vector<MicroPaymentRule> rules_;
  std::vector<Contract> contracts_;
  std::vector<std::size_t> item_owner_;
  std::optional<ValuationProfile> profile_;
};

struct LedgerEntry {
  enum class Kind { kPurchase, kPriceProbe };

  std::uint64_t sequence = 0;
  std::string timestamp;
  Kind kind = Kind::kPurchase;
  bool private_mode = false;
  std::vector<double> q;
  double v = 0.0;
  double price = 0.0;
  std::optional<double> answer;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> answer_draw;
  std::optional<std::uint64_t> price_draw;
  std::vector<std::pair<std::string, double>> payments;  // per owner
  double margin = 0.0;

  nlohmann::json to_json() const;
  static LedgerEntry from_json(const nlohmann::json& j);
};

// Append-only purchase log, optionally mirrored to a JSON-lines file.
class Ledger {
 public:
  Ledger() = default;
  // Loads an existing file (or starts empty if it does not exist) and appends
  // to it. Throws IntegrityError if it cannot be parsed.
  explicit Ledger(std::filesystem::path file);

  const std::vector<LedgerEntry>& entries() const noexcept { return entries_; }
  std::uint64_t next_sequence() const noexcept { return entries_.size(); }
  // First draw index not used by any entry.
  std::uint64_t next_draw() const noexcept;

  void append(LedgerEntry entry);

  // All entries as JSON lines, exactly as written to disk.
  std::string serialize() const;

 private:
  std::optional<std::filesystem::path> file_;
  std::vector<LedgerEntry> entries_;
};

std::vector<LedgerEntry> parse_ledger(const std::string& jsonl);

// Formats the sequence number of an entry as its timestamp.
using Clock = std::function<std::string(std::uint64_t sequence)>;
Clock system_clock();
// start + sequence seconds, as ISO-8601 UTC.
Clock logical_clock(std::int64_t start_epoch_seconds);

struct PurchaseResult {
  double answer = 0.0;
  LedgerEntry entry;
};

// One writer session over a market and its ledger. Answers depend only on
// (seed, draw index), never on ledger history.
class MarketSession {
 public:
  MarketSession(const Market& market, Ledger& ledger, Clock clock = system_clock());

  // Standard mode: the deterministic price, nothing logged. Private mode: a
  // noisy price, logged as a price probe.
  double quote(const PricedQuery& query);

  // Throws RefusedPurchase for an infinite price, an uninformative query
  // (v = inf) or a price that would not cover the micro-payments.
  PurchaseResult purchase(const PricedQuery& query);

  std::uint64_t next_draw() const noexcept { return noise_.next_draw(); }

 private:
  LedgerEntry start_entry(const PricedQuery& query, LedgerEntry::Kind kind) const;

  const Market& market_;
  Ledger& ledger_;
  Clock clock_;
  NoiseSource noise_;
};

struct PayoutSummary {
  std::map<std::string, double> per_owner;
  double revenue = 0.0;
  double paid = 0.0;
  double margin = 0.0;
  std::size_t purchases = 0;
  std::size_t price_probes = 0;
};

// Aggregates purchases. Checks sequence order and per-entry conservation and
// throws IntegrityError naming the first bad entry. Owners listed in
// `owners` appear in the result even with nothing earned.
PayoutSummary payouts(const std::vector<LedgerEntry>& entries, const std::vector<std::string>& owners = {});

// Re-derives each purchase's answer from (seed, draw index) alone.
double replay_answer(const LedgerEntry& entry, const Database& x);

struct MarketFuzzReport {
  FuzzReport price;
  std::vector<FuzzReport> items;  // one per item micro-payment

  std::size_t violation_count() const;
};

// Determinacy-instance fuzzing of the configured price and every item's
// micro-payment (in private mode, of their expectations).
MarketFuzzReport fuzz_arbitrage(const Market& market, std::size_t trials, std::mt19937_64& rng);
// As above with an arbitrary price in place of the configured one.
MarketFuzzReport fuzz_arbitrage(const Market& market, const PriceFn& price_fn, std::size_t trials,
                                std::mt19937_64& rng);

}  // namespace dpmarket

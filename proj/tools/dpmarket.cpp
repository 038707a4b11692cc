#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "dpmarket/determinacy.hpp"
#include "dpmarket/errors.hpp"
#include "dpmarket/json_io.hpp"
#include "dpmarket/market.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dpmarket;

namespace {

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

// Inline JSON, or @file.
json json_argument(const std::string& text) {
  if (!text.empty() && text.front() == '@') return read_json_file(text.substr(1));
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad JSON argument: ") + e.what());
  }
}

// "q" is either a dense array or {"range": [from, to, step], "value": x}
// over n items.
LinearQuery query_vector(const json& q, std::size_t n) {
  if (q.is_array()) return io::query_from_json(q);
  if (q.is_object() && q.contains("range")) {
    const auto& r = q.at("range");
    if (!r.is_array() || r.size() != 3) throw ValidationError("range is [from, to, step]");
    const auto from = r[0].get<std::size_t>(), to = r[1].get<std::size_t>(), step = r[2].get<std::size_t>();
    if (step == 0 || to > n) throw ValidationError("range must have step >= 1 and end <= n");
    const double value = q.contains("value") ? io::number_field(q, "value") : 1.0;
    std::vector<double> dense(n, 0.0);
    for (std::size_t i = from; i < to; i += step) dense[i] = value;
    return LinearQuery(std::move(dense));
  }
  throw ValidationError("a query is an array or {\"range\": [from, to, step], \"value\": x}");
}

PricedQuery priced_query(const json& j, std::size_t n) {
  if (!j.is_object() || !j.contains("q") || !j.contains("v")) throw ValidationError("a priced query is {\"q\":..,\"v\":..}");
  return PricedQuery(query_vector(j.at("q"), n), io::extended_from_json(j.at("v"), "v"));
}

std::int64_t parse_start_time(const json& j) {
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (!j.is_string()) throw ValidationError("start_time is epoch seconds or an ISO-8601 UTC string");
  std::tm tm{};
  std::istringstream in(j.get<std::string>());
  in >> std::get_time(&tm, "%Y-%m-%dT%H:%M:%S");
  if (in.fail()) throw ValidationError("cannot parse start_time '" + j.get<std::string>() + "'");
  return static_cast<std::int64_t>(timegm(&tm));
}

void print(const json& j) { std::cout << j.dump(2) << '\n'; }

json entry_summary(const LedgerEntry& e) {
  json j = e.to_json();
  j.erase("query");
  return j;
}

std::vector<std::string> owner_ids(const MarketConfig& config) {
  std::vector<std::string> ids;
  for (const auto& o : config.owners) ids.push_back(o.id);
  return ids;
}

json summary_json(const PayoutSummary& s) {
  return {{"per_owner", s.per_owner}, {"revenue", s.revenue},   {"paid", s.paid},
          {"margin", s.margin},       {"purchases", s.purchases}, {"price_probes", s.price_probes}};
}

struct CurvePoint {
  double v, price, paid;
};

std::vector<CurvePoint> price_curve(const Market& market, const LinearQuery& q, double vmin, double vmax,
                                    std::size_t points) {
  if (!(vmin > 0.0) || !(vmax > vmin) || points < 2) throw ValidationError("need 0 < vmin < vmax and >= 2 points");
  std::vector<CurvePoint> curve;
  const double step = std::log(vmax / vmin) / static_cast<double>(points - 1);
  for (std::size_t k = 0; k < points; ++k) {
    const PricedQuery pq(q, vmin * std::exp(step * static_cast<double>(k)));
    double paid = 0.0;
    if (market.private_mode()) {
      paid = market.quote(pq);
    } else {
      for (double mu : market.item_payments(pq)) paid += mu;
    }
    curve.push_back({pq.variance, market.quote(pq), paid});
  }
  return curve;
}

void write_csv(std::ostream& out, const std::vector<CurvePoint>& curve) {
  out << "v,price,micro_payments,margin\n" << std::setprecision(17);
  for (const auto& p : curve) out << p.v << ',' << p.price << ',' << p.paid << ',' << p.price - p.paid << '\n';
}

// Log-log plot of price and total micro-payments against v.
void write_svg(std::ostream& out, const std::vector<CurvePoint>& curve) {
  constexpr double W = 640, H = 420, L = 70, R = 20, T = 20, B = 50;
  double ylo = kInfinity, yhi = 0.0;
  for (const auto& p : curve) {
    for (double y : {p.price, p.paid}) {
      if (y > 0.0 && std::isfinite(y)) {
        ylo = std::min(ylo, y);
        yhi = std::max(yhi, y);
      }
    }
  }
  if (!(yhi > 0.0)) {
    ylo = 0.1;
    yhi = 1.0;
  }
  if (yhi <= ylo) yhi = ylo * 10.0;
  const double lx0 = std::log10(curve.front().v), lx1 = std::log10(curve.back().v);
  const double ly0 = std::floor(std::log10(ylo)), ly1 = std::ceil(std::log10(yhi));
  auto sx = [&](double v) { return L + (std::log10(v) - lx0) / (lx1 - lx0) * (W - L - R); };
  auto sy = [&](double y) { return H - B - (std::log10(y) - ly0) / (ly1 - ly0) * (H - T - B); };
  auto polyline = [&](auto value, const char* colour) {
    out << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"";
    for (const auto& p : curve) {
      const double y = value(p);
      if (y > 0.0 && std::isfinite(y)) out << sx(p.v) << ',' << sy(y) << ' ';
    }
    out << "\"/>\n";
  };
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (double e = std::ceil(lx0); e <= lx1; e += 1.0) {
    out << "<text x=\"" << sx(std::pow(10.0, e)) << "\" y=\"" << H - B + 18 << "\" font-size=\"11\" "
        << "text-anchor=\"middle\">1e" << e << "</text>\n";
  }
  for (double e = ly0; e <= ly1; e += 1.0) {
    out << "<text x=\"" << L - 6 << "\" y=\"" << sy(std::pow(10.0, e)) + 4 << "\" font-size=\"11\" "
        << "text-anchor=\"end\">1e" << e << "</text>\n";
  }
  out << "<text x=\"" << (W + L) / 2 << "\" y=\"" << H - 10 << "\" font-size=\"12\" text-anchor=\"middle\">"
      << "variance v</text>\n";
  polyline([](const CurvePoint& p) { return p.price; }, "#1f77b4");
  polyline([](const CurvePoint& p) { return p.paid; }, "#d62728");
  out << "<text x=\"" << W - R - 150 << "\" y=\"" << T + 12 << "\" font-size=\"12\" fill=\"#1f77b4\">price</text>\n";
  out << "<text x=\"" << W - R - 150 << "\" y=\"" << T + 28 << "\" font-size=\"12\" fill=\"#d62728\">"
      << "micro-payments</text>\n";
  out << "</svg>\n";
}

struct Options {
  std::string config;
  std::string ledger;
  std::string query;
  std::string script;
  std::string verify;
  std::string plot;
  std::string instance;
  std::size_t trials = 10000;
  std::uint64_t fuzz_seed = 1;
  double inject = std::nan("");
  double vmin = 1.0, vmax = 1e6;
  std::size_t points = 61;
};

int run_simulate(const Options& opt) {
  const Market market(load_config(opt.config));
  const json script = read_json_file(opt.script);
  if (!script.contains("purchases") || !script.at("purchases").is_array()) {
    throw ValidationError("script needs a purchases array");
  }
  const std::int64_t start = script.contains("start_time") ? parse_start_time(script.at("start_time")) : 0;
  if (fs::exists(opt.ledger)) throw ValidationError("ledger " + opt.ledger + " already exists");
  Ledger ledger(opt.ledger);
  MarketSession session(market, ledger, logical_clock(start));
  std::size_t refused = 0;
  for (const auto& step : script.at("purchases")) {
    const auto q = priced_query(step, market.size());
    const auto repeat = step.contains("repeat") ? step.at("repeat").get<std::size_t>() : 1;
    for (std::size_t k = 0; k < repeat; ++k) {
      try {
        session.purchase(q);
      } catch (const RefusedPurchase&) {
        ++refused;
      }
    }
  }
  json out = {{"purchases", ledger.entries().size()}, {"refused", refused},
              {"summary", summary_json(payouts(ledger.entries(), owner_ids(market.config())))}};
  if (!opt.verify.empty()) {
    std::ifstream in(opt.verify);
    if (!in) throw ValidationError("cannot open " + opt.verify);
    std::stringstream expected;
    expected << in.rdbuf();
    const bool same = expected.str() == ledger.serialize();
    out["verified"] = same;
    print(out);
    if (!same) throw IntegrityError(-1, "replayed ledger differs from " + opt.verify);
    return 0;
  }
  print(out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentially private data market maker"};
  app.require_subcommand(1);
  Options opt;

  auto* quote = app.add_subcommand("quote", "Price a query");
  quote->add_option("-c,--config", opt.config, "Market config")->required();
  quote->add_option("-q,--query", opt.query, "{\"q\":[..],\"v\":..} or @file")->required();
  quote->add_option("-l,--ledger", opt.ledger, "Ledger (private valuations log each quote)");

  auto* buy = app.add_subcommand("buy", "Purchase a noisy answer");
  buy->add_option("-c,--config", opt.config, "Market config")->required();
  buy->add_option("-q,--query", opt.query, "{\"q\":[..],\"v\":..} or @file")->required();
  buy->add_option("-l,--ledger", opt.ledger, "Ledger file")->required();

  auto* pay = app.add_subcommand("payouts", "Aggregate micro-payments per owner");
  pay->add_option("-l,--ledger", opt.ledger, "Ledger file")->required();
  pay->add_option("-c,--config", opt.config, "Market config (lists owners with nothing earned)");

  auto* det = app.add_subcommand("check-determinacy", "Decide whether a bundle determines a query");
  det->add_option("instance", opt.instance, "{\"bundle\":[{q,v},..],\"target\":{q,v}} or @file")->required();

  auto* fuzz = app.add_subcommand("fuzz-arbitrage", "Search for arbitrage in the configured prices");
  fuzz->add_option("-c,--config", opt.config, "Market config")->required();
  fuzz->add_option("-n,--trials", opt.trials, "Determinacy instances")->check(CLI::PositiveNumber);
  fuzz->add_option("-s,--seed", opt.fuzz_seed, "Generator seed");
  fuzz->add_option("--inject-constant", opt.inject, "Fuzz a constant price instead (bypasses validation)");

  auto* sim = app.add_subcommand("simulate", "Run a scripted purchase sequence");
  sim->add_option("-c,--config", opt.config, "Market config")->required();
  sim->add_option("-s,--script", opt.script, "Script {start_time, purchases:[{q,v,repeat}]}")->required();
  sim->add_option("-l,--ledger", opt.ledger, "New ledger file")->required();
  sim->add_option("--verify", opt.verify, "Compare the result with this ledger byte for byte");

  auto* report = app.add_subcommand("report", "Price against variance for one query");
  report->add_option("-c,--config", opt.config, "Market config")->required();
  report->add_option("-q,--query", opt.query, "{\"q\":[..]} or @file")->required();
  report->add_option("--plot", opt.plot, "Output .svg or .csv")->required();
  report->add_option("--vmin", opt.vmin, "Smallest variance");
  report->add_option("--vmax", opt.vmax, "Largest variance");
  report->add_option("--points", opt.points, "Samples on the log-spaced grid");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(ErrorKind::kValidation);
  }

  try {
    if (*quote) {
      const Market market(load_config(opt.config));
      const auto q = priced_query(json_argument(opt.query), market.size());
      if (market.private_mode()) {
        if (opt.ledger.empty()) throw ValidationError("private-valuation quotes are logged; pass --ledger");
        Ledger ledger(opt.ledger);
        MarketSession session(market, ledger);
        const double price = session.quote(q);
        print({{"price", price}, {"expected_price", market.quote(q)}, {"seq", ledger.entries().back().sequence}});
      } else {
        print({{"price", io::extended_to_json(market.quote(q))}});
      }
    } else if (*buy) {
      const Market market(load_config(opt.config));
      const auto q = priced_query(json_argument(opt.query), market.size());
      Ledger ledger(opt.ledger);
      MarketSession session(market, ledger);
      const auto result = session.purchase(q);
      print(entry_summary(result.entry));
    } else if (*pay) {
      if (!fs::exists(opt.ledger)) throw ValidationError("no ledger at " + opt.ledger);
      const Ledger ledger(opt.ledger);
      std::vector<std::string> owners;
      if (!opt.config.empty()) owners = owner_ids(load_config(opt.config));
      print(summary_json(payouts(ledger.entries(), owners)));
    } else if (*det) {
      const json j = json_argument(opt.instance);
      if (!j.contains("bundle") || !j.contains("target")) throw ValidationError("need bundle and target");
      QueryBundle bundle;
      for (const auto& e : j.at("bundle")) bundle.push_back(io::priced_query_from_json(e));
      const auto target = io::priced_query_from_json(j.at("target"));
      json out = io::to_json(min_variance(bundle, target.query));
      out["determines"] = determines(bundle, target);
      print(out);
    } else if (*fuzz) {
      const Market market(load_config(opt.config));
      std::mt19937_64 rng(opt.fuzz_seed);
      MarketFuzzReport r;
      if (std::isnan(opt.inject)) {
        r = fuzz_arbitrage(market, opt.trials, rng);
      } else {
        const double c = opt.inject;
        r = fuzz_arbitrage(market, [c](const PricedQuery&) { return c; }, opt.trials, rng);
      }
      json items = json::array();
      for (const auto& item : r.items) items.push_back(item.violations.size());
      json first = nullptr;
      if (!r.price.violations.empty()) {
        const auto& v = r.price.violations.front();
        json bundle = json::array();
        for (const auto& q : v.instance.bundle) bundle.push_back(io::to_json(q));
        first = {{"bundle", bundle}, {"target", io::to_json(v.instance.target)},
                 {"target_price", io::extended_to_json(v.target_price)},
                 {"bundle_price", io::extended_to_json(v.bundle_price)}};
      }
      print({{"trials", r.price.trials},
             {"rule_forward", r.price.rule_forward},
             {"random_filtered", r.price.random_filtered},
             {"price_violations", r.price.violations.size()},
             {"item_violations", items},
             {"total_violations", r.violation_count()},
             {"first_price_violation", first}});
    } else if (*sim) {
      return run_simulate(opt);
    } else if (*report) {
      const Market market(load_config(opt.config));
      const json j = json_argument(opt.query);
      const auto q = query_vector(j.is_object() && j.contains("q") ? j.at("q") : j, market.size());
      const auto curve = price_curve(market, q, opt.vmin, opt.vmax, opt.points);
      std::ofstream out(opt.plot);
      if (!out) throw ValidationError("cannot write " + opt.plot);
      if (fs::path(opt.plot).extension() == ".csv") {
        write_csv(out, curve);
      } else {
        write_svg(out, curve);
      }
      print({{"written", opt.plot}, {"points", curve.size()}});
    }
  } catch (const MarketError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ErrorKind::kValidation);
  }
  return 0;
}

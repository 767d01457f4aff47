#include "glean/cost.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "glean/errors.hpp"
#include "glean/fs.hpp"
#include "glean/structured.hpp"
#include "glean/text.hpp"

namespace glean {

namespace {

// Half-up rounding of a*b/divisor without intermediate overflow.
std::int64_t mul_div_round(std::int64_t a, std::int64_t b,
                           std::int64_t divisor) {
  __int128 prod = static_cast<__int128>(a) * b;
  bool negative = prod < 0;
  if (negative) prod = -prod;
  __int128 q = (prod + divisor / 2) / divisor;
  return static_cast<std::int64_t>(negative ? -q : q);
}

}  // namespace

Currency Currency::parse(std::string_view text) {
  std::string s(text);
  if (s.empty()) raise(Errc::parse, "empty currency value");
  std::size_t dot = s.find('.');
  std::string whole = dot == std::string::npos ? s : s.substr(0, dot);
  std::string frac = dot == std::string::npos ? "" : s.substr(dot + 1);
  if (frac.size() > 6) {
    raise(Errc::parse, "currency '" + s + "': more than 6 fractional digits");
  }
  bool negative = !whole.empty() && whole[0] == '-';
  if (negative) whole.erase(0, 1);
  if (whole.empty()) whole = "0";
  for (char c : whole + frac) {
    if (c < '0' || c > '9') {
      raise(Errc::parse, "invalid currency value: '" + s + "'");
    }
  }
  frac.append(6 - frac.size(), '0');
  std::int64_t value = std::strtoll(whole.c_str(), nullptr, 10) * 1000000 +
                       std::strtoll(frac.c_str(), nullptr, 10);
  return Currency{negative ? -value : value};
}

Currency Currency::from_double(double value) {
  if (!std::isfinite(value)) raise(Errc::parse, "non-finite currency value");
  return Currency{static_cast<std::int64_t>(std::llround(value * 1e6))};
}

std::string Currency::str() const {
  std::int64_t m = micros;
  const char* sign = "";
  if (m < 0) {
    sign = "-";
    m = -m;
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%s%lld.%06lld", sign,
                static_cast<long long>(m / 1000000),
                static_cast<long long>(m % 1000000));
  return buf;
}

std::int64_t approx_tokens(std::string_view text) {
  std::size_t n = codepoint_count(text);
  return static_cast<std::int64_t>((n + 3) / 4);
}

PricingTable PricingTable::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) {
    raise(Errc::parse, "pricing table: top level must be a mapping");
  }
  PricingTable table;
  for (auto provider = doc.begin(); provider != doc.end(); ++provider) {
    if (!provider.value().is_object()) {
      raise(Errc::parse, "pricing table: provider '" + provider.key() +
                             "' must map model ids");
    }
    for (auto model = provider.value().begin(); model != provider.value().end();
         ++model) {
      const auto& entry = model.value();
      auto price_of = [&](const char* key) {
        if (!entry.contains(key)) {
          raise(Errc::parse, "pricing for " + provider.key() + "/" +
                                 model.key() + " missing '" + key + "'");
        }
        const auto& v = entry[key];
        Currency c = v.is_string() ? Currency::parse(v.get<std::string>())
                                   : Currency::from_double(v.get<double>());
        if (c.micros < 0) {
          raise(Errc::parse, "negative price for " + provider.key() + "/" +
                                 model.key());
        }
        return c;
      };
      table.set(provider.key(), model.key(),
                {price_of("input_per_1m"), price_of("output_per_1m")});
    }
  }
  return table;
}

PricingTable PricingTable::load_file(const std::filesystem::path& path) {
  return from_json(parse_structured_text(read_file(path), path.string()));
}

void PricingTable::set(const std::string& provider_id,
                       const std::string& model_id, ModelPrice price) {
  prices_[{provider_id, model_id}] = price;
}

const ModelPrice& PricingTable::lookup(const std::string& provider_id,
                                       const std::string& model_id) const {
  auto it = prices_.find({provider_id, model_id});
  if (it == prices_.end()) {
    raise(Errc::unknown_model,
          "no pricing for " + provider_id + "/" + model_id);
  }
  return it->second;
}

bool PricingTable::has(const std::string& provider_id,
                       const std::string& model_id) const {
  return prices_.count({provider_id, model_id}) != 0;
}

Currency call_cost(const TokenUsage& usage, const PricingTable& pricing,
                   const std::string& provider_id,
                   const std::string& model_id) {
  const ModelPrice& price = pricing.lookup(provider_id, model_id);
  std::int64_t micros =
      mul_div_round(usage.input_tokens, price.input_per_1m.micros, 1000000) +
      mul_div_round(usage.output_tokens, price.output_per_1m.micros, 1000000);
  return Currency{micros};
}

Currency scale_to_population(Currency sample_cost, std::int64_t sample_chunks,
                             std::int64_t population_chunks) {
  if (sample_chunks < 1) {
    raise(Errc::empty_sample, "population scaling needs sample_chunks >= 1");
  }
  return Currency{
      mul_div_round(sample_cost.micros, population_chunks, sample_chunks)};
}

ChargeDecision CostLedger::charge(Currency cost, Currency next_call_estimate) {
  std::lock_guard lock(mu_);
  total_ += cost;
  if (budget_ && (total_ + reserved_ + next_call_estimate) > *budget_) {
    return ChargeDecision::halt;
  }
  return ChargeDecision::proceed;
}

bool CostLedger::try_reserve(Currency estimate) {
  std::lock_guard lock(mu_);
  if (budget_ && (total_ + reserved_ + estimate) > *budget_) {
    return false;
  }
  reserved_ += estimate;
  return true;
}

void CostLedger::release(Currency estimate) {
  std::lock_guard lock(mu_);
  reserved_.micros -= estimate.micros;
}

void CostLedger::settle(Currency estimate, Currency actual,
                        const TokenUsage& usage, const std::string& role) {
  std::lock_guard lock(mu_);
  reserved_.micros -= estimate.micros;
  total_ += actual;
  calls_ += 1;
  usage_ += usage;
  auto& role_totals = per_role_[role];
  role_totals.cost += actual;
  role_totals.calls += 1;
}

void CostLedger::record_cached(const TokenUsage& usage,
                               const std::string& role) {
  std::lock_guard lock(mu_);
  cache_hits_ += 1;
  usage_ += usage;
  per_role_[role];  // role appears in the breakdown even at zero cost
}

Currency CostLedger::total_cost() const {
  std::lock_guard lock(mu_);
  return total_;
}

std::int64_t CostLedger::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

std::int64_t CostLedger::calls_served_from_cache() const {
  std::lock_guard lock(mu_);
  return cache_hits_;
}

TokenUsage CostLedger::usage_totals() const {
  std::lock_guard lock(mu_);
  return usage_;
}

void CostLedger::set_budget(std::optional<Currency> budget) {
  std::lock_guard lock(mu_);
  budget_ = budget;
}

nlohmann::json CostLedger::snapshot() const {
  std::lock_guard lock(mu_);
  nlohmann::json roles = nlohmann::json::object();
  for (const auto& [role, totals] : per_role_) {
    roles[role] = {{"cost", totals.cost.str()}, {"calls", totals.calls}};
  }
  nlohmann::json snap{{"total_cost", total_.str()},
                      {"calls", calls_},
                      {"calls_served_from_cache", cache_hits_},
                      {"input_tokens", usage_.input_tokens},
                      {"output_tokens", usage_.output_tokens},
                      {"estimated", usage_.estimated},
                      {"per_role", std::move(roles)}};
  if (budget_) snap["budget"] = budget_->str();
  return snap;
}

void CostLedger::restore(const nlohmann::json& snap) {
  std::lock_guard lock(mu_);
  total_ = Currency::parse(snap.at("total_cost").get<std::string>());
  calls_ = snap.at("calls").get<std::int64_t>();
  cache_hits_ = snap.at("calls_served_from_cache").get<std::int64_t>();
  usage_.input_tokens = snap.at("input_tokens").get<std::int64_t>();
  usage_.output_tokens = snap.at("output_tokens").get<std::int64_t>();
  usage_.estimated = snap.at("estimated").get<bool>();
  reserved_ = Currency{};
  per_role_.clear();
  if (snap.contains("per_role")) {
    for (auto it = snap["per_role"].begin(); it != snap["per_role"].end();
         ++it) {
      per_role_[it.key()] = {
          Currency::parse(it.value().at("cost").get<std::string>()),
          it.value().at("calls").get<std::int64_t>()};
    }
  }
}

}  // namespace glean

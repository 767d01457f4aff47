#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace glean {

// Exact decimal money with 6 fractional digits. The ledger never touches
// binary floating point, so reconciliation against the audit log is exact.
struct Currency {
  std::int64_t micros = 0;

  static Currency from_micros(std::int64_t m) { return Currency{m}; }
  static Currency parse(std::string_view text);     // "1.50" -> 1500000 micros
  static Currency from_double(double value);        // config convenience, rounded

  std::string str() const;  // fixed "1.500000"
  double approx() const { return static_cast<double>(micros) / 1e6; }

  Currency operator+(Currency o) const { return {micros + o.micros}; }
  Currency& operator+=(Currency o) { micros += o.micros; return *this; }
  auto operator<=>(const Currency&) const = default;
};

struct TokenUsage {
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  bool estimated = false;  // counted by approximation, not provider-reported

  TokenUsage& operator+=(const TokenUsage& o) {
    input_tokens += o.input_tokens;
    output_tokens += o.output_tokens;
    estimated = estimated || o.estimated;
    return *this;
  }
};

// ceil(code points / 4). Provider-agnostic default; exact tokenizers are
// model-specific plugins behind the same signature.
std::int64_t approx_tokens(std::string_view text);

struct ModelPrice {
  Currency input_per_1m;
  Currency output_per_1m;
};

// Lookups for unknown models are errors, never silent zeros.
class PricingTable {
 public:
  static PricingTable from_json(const nlohmann::json& doc);
  static PricingTable load_file(const std::filesystem::path& path);

  void set(const std::string& provider_id, const std::string& model_id,
           ModelPrice price);
  const ModelPrice& lookup(const std::string& provider_id,
                           const std::string& model_id) const;
  bool has(const std::string& provider_id, const std::string& model_id) const;

 private:
  std::map<std::pair<std::string, std::string>, ModelPrice> prices_;
};

Currency call_cost(const TokenUsage& usage, const PricingTable& pricing,
                   const std::string& provider_id, const std::string& model_id);

Currency scale_to_population(Currency sample_cost, std::int64_t sample_chunks,
                             std::int64_t population_chunks);

enum class ChargeDecision { proceed, halt };

// Thread-safe per-run accumulator with optional budget. The reservation
// pair (try_reserve/settle) is what concurrent workers use: no two workers
// can both pass a budget check that only one could afford.
class CostLedger {
 public:
  explicit CostLedger(std::optional<Currency> budget = std::nullopt)
      : budget_(budget) {}

  // Sequential form: adds cost, then halts when the budget could not cover
  // the next call. Halt is a value, not an error.
  ChargeDecision charge(Currency cost, Currency next_call_estimate);

  // Reserve before a provider call; estimate must upper-bound the cost.
  bool try_reserve(Currency estimate);
  void release(Currency estimate);  // call failed, nothing spent
  void settle(Currency estimate, Currency actual, const TokenUsage& usage,
              const std::string& role);
  void record_cached(const TokenUsage& usage, const std::string& role);

  Currency total_cost() const;
  std::int64_t calls() const;
  std::int64_t calls_served_from_cache() const;
  TokenUsage usage_totals() const;
  std::optional<Currency> budget() const { return budget_; }
  void set_budget(std::optional<Currency> budget);

  nlohmann::json snapshot() const;
  void restore(const nlohmann::json& snap);

 private:
  mutable std::mutex mu_;
  std::optional<Currency> budget_;
  Currency total_;
  Currency reserved_;
  std::int64_t calls_ = 0;
  std::int64_t cache_hits_ = 0;
  TokenUsage usage_;
  struct RoleTotals {
    Currency cost;
    std::int64_t calls = 0;
  };
  std::map<std::string, RoleTotals> per_role_;
};

}  // namespace glean

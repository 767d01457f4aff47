#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "glean/cache.hpp"
#include "glean/config.hpp"
#include "glean/cost.hpp"
#include "glean/ingest.hpp"
#include "glean/provider.hpp"
#include "glean/relevance.hpp"
#include "glean/schema.hpp"

namespace glean {

// Layout of <workspace>/runs/<run_id>/.
struct RunPaths {
  std::filesystem::path run_dir;

  static RunPaths for_run(const std::filesystem::path& workspace,
                          const std::string& run_id);

  std::filesystem::path config_snapshot() const { return run_dir / "config.snapshot"; }
  std::filesystem::path schema_snapshot() const { return run_dir / "schema.snapshot"; }
  std::filesystem::path plan() const { return run_dir / "plan.json"; }
  std::filesystem::path manifest() const { return run_dir / "manifest.json"; }
  std::filesystem::path audit_log() const { return run_dir / "audit.log"; }
  std::filesystem::path records() const { return run_dir / "records.jsonl"; }
  std::filesystem::path failures() const { return run_dir / "failures.jsonl"; }
  std::filesystem::path ledger() const { return run_dir / "ledger.json"; }
  std::filesystem::path checkpoint() const {
    return run_dir / "checkpoint" / "checkpoint.json";
  }
  std::filesystem::path parts_dir() const { return run_dir / "parts"; }
};

struct FailureRow {
  std::string chunk_id;
  std::string kind;  // "validation" | "provider"
  std::string detail;
  std::string raw_text;

  nlohmann::json to_json() const;
  static FailureRow from_json(const nlohmann::json& doc);
};

struct AuditRow {
  std::string chunk_id;
  std::string role = "extractor";
  bool cache_hit = false;
  int attempts = 0;
  TokenUsage usage;
  Currency cost;
  std::string outcome;

  nlohmann::json to_json() const;
};

enum class RunStatus { complete, halted_budget, interrupted };
const char* run_status_name(RunStatus status);

struct RunResult {
  std::string run_id;
  RunStatus status = RunStatus::complete;
  std::vector<ValidatedRecord> records;  // sorted by chunk id
  std::vector<FailureRow> failures;      // sorted by chunk id
  nlohmann::json ledger;
  std::filesystem::path run_dir;
  std::int64_t provider_sends = 0;
};

struct ExecutorHooks {
  // Called after each committed batch with the number of batches completed
  // so far; returning false aborts the run without consolidation — the
  // kill-injection point for resume testing.
  std::function<bool(std::size_t)> after_batch;
};

struct RunOptions {
  std::string run_id;                  // empty -> derived from the identity digest
  std::vector<std::string> overrides;  // CLI flag overrides, recorded in the manifest
  ExecutorHooks hooks;
  std::shared_ptr<Gateway> gateway;    // injected for tests; built from config otherwise
  std::shared_ptr<CacheStore> cache;   // likewise
};

// Gateway wired with the providers the config names (mock and/or HTTP
// profiles). Jitter randomness derives from the config seed.
std::shared_ptr<Gateway> build_gateway(const RunConfig& cfg);

std::vector<Chunk> load_and_chunk(const RunConfig& cfg);
FilterResult apply_relevance(const RunConfig& cfg,
                             const std::vector<Chunk>& chunks);

// One provider interaction through cache -> budget reservation -> gateway.
// The gateway never sees the cache; this is the only place the two meet.
// Provider errors propagate as glean::Error; a failed budget reservation
// returns halted=true with nothing spent.
struct CallResult {
  std::string body;
  TokenUsage usage;
  Currency cost;
  bool cache_hit = false;
  int attempts = 0;
  bool halted = false;
};

CallResult cached_call(const ProviderRequest& req, const RetryPolicy& retry,
                       Gateway& gateway, CacheStore* cache, CostLedger& ledger,
                       const PricingTable& pricing, const std::string& role);

// One chunk end to end: render -> cached_call -> schema validation.
struct ChunkOutcome {
  std::string chunk_id;
  std::vector<ValidatedRecord> records;
  std::optional<FailureRow> failure;
  AuditRow audit;
  bool halted = false;  // budget reservation failed; chunk not processed
};

ChunkOutcome process_chunk(const Chunk& chunk, const ExtractionSchema& schema,
                           const RunConfig& cfg, Gateway& gateway,
                           CacheStore* cache, CostLedger& ledger,
                           const PricingTable& pricing,
                           const std::string& role);

// Pipeline: load -> split -> filter -> per kept chunk (cache else send,
// validate) -> checkpoint after every batch -> consolidate. Failures are
// first-class outputs, never aborts. A budget halt checkpoints cleanly and
// returns status halted_budget.
RunResult run_extraction(const RunConfig& cfg, const RunOptions& opts = {});

// Processes only chunks missing from the checkpoint's completed set.
// Refuses to resume when the identity digest drifted (Errc::digest_mismatch);
// raising the budget is the one permitted override.
RunResult resume_extraction(const std::filesystem::path& workspace,
                            const std::string& run_id,
                            std::optional<Currency> budget_override = std::nullopt,
                            const RunOptions& opts = {});

// Merge batch outputs into records.jsonl / failures.jsonl / ledger.json,
// order-normalized by chunk id and deduplicated. Idempotent; raises
// Errc::incomplete_run when outputs do not cover the kept chunks.
void consolidate_run(const std::filesystem::path& run_dir);

}  // namespace glean

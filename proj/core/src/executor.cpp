#include "glean/executor.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <map>
#include <set>
#include <thread>

#include "glean/canonical.hpp"
#include "glean/errors.hpp"
#include "glean/fs.hpp"

namespace glean {

namespace fsys = std::filesystem;

RunPaths RunPaths::for_run(const fsys::path& workspace,
                           const std::string& run_id) {
  return RunPaths{workspace / "runs" / run_id};
}

nlohmann::json FailureRow::to_json() const {
  return nlohmann::json{{"chunk_id", chunk_id},
                        {"kind", kind},
                        {"detail", detail},
                        {"raw_text", raw_text}};
}

FailureRow FailureRow::from_json(const nlohmann::json& doc) {
  return FailureRow{doc.at("chunk_id").get<std::string>(),
                    doc.at("kind").get<std::string>(),
                    doc.at("detail").get<std::string>(),
                    doc.value("raw_text", std::string())};
}

nlohmann::json AuditRow::to_json() const {
  return nlohmann::json{{"chunk_id", chunk_id},
                        {"role", role},
                        {"cache_hit", cache_hit},
                        {"attempts", attempts},
                        {"usage",
                         {{"input_tokens", usage.input_tokens},
                          {"output_tokens", usage.output_tokens},
                          {"estimated", usage.estimated}}},
                        {"cost", cost.str()},
                        {"outcome", outcome}};
}

const char* run_status_name(RunStatus status) {
  switch (status) {
    case RunStatus::complete: return "complete";
    case RunStatus::halted_budget: return "halted-budget";
    case RunStatus::interrupted: return "interrupted";
  }
  return "complete";
}

std::shared_ptr<Gateway> build_gateway(const RunConfig& cfg) {
  auto gateway = std::make_shared<Gateway>(cfg.seed);
  if (cfg.mock) {
    gateway->register_provider(
        "mock", std::make_shared<MockProvider>(cfg.mock->to_script()));
  }
  for (const auto& profile : cfg.http_profiles) {
    gateway->register_http_profile(HttpProviderProfile::from_json(profile));
  }
  if (!gateway->has_provider(cfg.provider_id)) {
    raise(Errc::config, "provider '" + cfg.provider_id +
                            "' is not configured (add a mock script or an "
                            "http provider profile)");
  }
  return gateway;
}

std::vector<Chunk> load_and_chunk(const RunConfig& cfg) {
  auto docs = load_documents(cfg.data_source, cfg.format, cfg.text_column);
  std::set<std::string> ids;
  std::vector<Chunk> chunks;
  for (const auto& doc : docs) {
    if (!ids.insert(doc.doc_id).second) {
      raise(Errc::format, "duplicate doc id in corpus: '" + doc.doc_id + "'");
    }
    auto doc_chunks = split(doc, cfg.split_strategy);
    chunks.insert(chunks.end(), doc_chunks.begin(), doc_chunks.end());
  }
  return chunks;
}

FilterResult apply_relevance(const RunConfig& cfg,
                             const std::vector<Chunk>& chunks) {
  if (!cfg.relevance.enabled()) {
    return FilterResult{chunks, 0};
  }
  return filter_chunks(chunks, cfg.relevance.make_scorer(),
                       cfg.relevance.effective_cutoff());
}

namespace {

nlohmann::json record_to_json(const ValidatedRecord& rec) {
  return nlohmann::json{{"chunk_id", rec.chunk_id},
                        {"schema_digest", rec.schema_digest},
                        {"values", rec.values},
                        {"raw_text", rec.raw_text}};
}

ValidatedRecord record_from_json(const nlohmann::json& doc) {
  ValidatedRecord rec;
  rec.chunk_id = doc.at("chunk_id").get<std::string>();
  rec.schema_digest = doc.at("schema_digest").get<std::string>();
  rec.values = doc.at("values");
  rec.raw_text = doc.value("raw_text", std::string());
  return rec;
}

struct Checkpoint {
  std::string run_id;
  std::string config_digest;
  std::set<std::string> completed;
  std::size_t batch_cursor = 0;
  int session = 0;
  nlohmann::json ledger;

  nlohmann::json to_json() const {
    return nlohmann::json{
        {"run_id", run_id},
        {"config_digest", config_digest},
        {"completed_chunk_ids",
         std::vector<std::string>(completed.begin(), completed.end())},
        {"batch_cursor", batch_cursor},
        {"session", session},
        {"ledger", ledger}};
  }

  static Checkpoint from_json(const nlohmann::json& doc) {
    Checkpoint cp;
    cp.run_id = doc.at("run_id").get<std::string>();
    cp.config_digest = doc.at("config_digest").get<std::string>();
    for (const auto& id : doc.at("completed_chunk_ids")) {
      cp.completed.insert(id.get<std::string>());
    }
    cp.batch_cursor = doc.at("batch_cursor").get<std::size_t>();
    cp.session = doc.at("session").get<int>();
    cp.ledger = doc.at("ledger");
    return cp;
  }
};

std::string derive_run_id(const fsys::path& workspace,
                          const std::string& digest) {
  std::string prefix = "r" + digest.substr(0, 12);
  for (int n = 1; n < 100000; ++n) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "-%03d", n);
    std::string candidate = prefix + buf;
    if (!fsys::exists(workspace / "runs" / candidate)) return candidate;
  }
  raise(Errc::internal, "run id space exhausted for " + prefix);
}

// Everything a batch loop needs, whether starting fresh or resuming.
struct Session {
  RunConfig cfg;
  ExtractionSchema schema;
  PricingTable pricing;
  std::shared_ptr<Gateway> gateway;
  std::shared_ptr<CacheStore> cache;  // may be null (cache disabled)
  std::shared_ptr<CostLedger> ledger;
  RunPaths paths;
  std::string run_id;
  std::string identity_digest;
  std::vector<Chunk> kept;
  std::size_t dropped = 0;
  std::size_t total_chunks = 0;
  std::size_t doc_count = 0;
  std::set<std::string> completed;
  std::size_t batch_cursor = 0;
  int session_index = 0;
  std::vector<std::string> overrides;
};

void write_manifest(const Session& s, RunStatus status, bool finalize) {
  nlohmann::json provider{{"provider_id", s.cfg.provider_id},
                          {"model_id", s.cfg.model_id},
                          {"temperature", s.cfg.params.temperature},
                          {"max_output_tokens", s.cfg.params.max_output_tokens}};
  if (s.cfg.params.seed) provider["seed"] = *s.cfg.params.seed;
  nlohmann::json doc{
      {"run_id", s.run_id},
      {"kind", "extract"},
      {"status", run_status_name(status)},
      {"running", !finalize},
      {"config_digest", s.identity_digest},
      {"schema", {{"name", s.schema.schema_name}, {"digest", s.schema.digest}}},
      {"data",
       {{"source", s.cfg.data_source.string()},
        {"format", input_format_name(s.cfg.format)},
        {"docs", s.doc_count},
        {"chunks", s.total_chunks},
        {"kept", s.kept.size()},
        {"dropped", s.dropped}}},
      {"provider", std::move(provider)},
      {"seed", s.cfg.seed},
      {"overrides", s.overrides},
      {"costs", s.ledger->snapshot()},
      {"session", s.session_index},
      {"updated_at", now_iso8601_utc()}};
  if (s.cfg.budget) doc["budget"] = s.cfg.budget->str();
  fsys::path path = s.paths.manifest();
  if (fsys::exists(path)) {
    auto existing = nlohmann::json::parse(read_file(path), nullptr, false);
    if (existing.is_object() && existing.contains("created_at")) {
      doc["created_at"] = existing["created_at"];
    }
  }
  if (!doc.contains("created_at")) doc["created_at"] = doc["updated_at"];
  write_file_atomic(path, doc.dump(2));
}

void write_checkpoint(const Session& s) {
  Checkpoint cp;
  cp.run_id = s.run_id;
  cp.config_digest = s.identity_digest;
  cp.completed = s.completed;
  cp.batch_cursor = s.batch_cursor;
  cp.session = s.session_index;
  cp.ledger = s.ledger->snapshot();
  write_file_atomic(s.paths.checkpoint(), cp.to_json().dump());
}

struct PartRow {
  std::string chunk_id;
  std::vector<ValidatedRecord> records;
  std::optional<FailureRow> failure;
};

void load_parts(const fsys::path& parts_dir,
                std::map<std::string, PartRow>& rows_by_chunk) {
  if (!fsys::exists(parts_dir)) return;
  std::vector<fsys::path> files;
  for (const auto& e : fsys::directory_iterator(parts_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".jsonl") {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    for (const auto& row : read_jsonl(file)) {
      PartRow part;
      part.chunk_id = row.at("chunk_id").get<std::string>();
      for (const auto& rec : row.at("records")) {
        part.records.push_back(record_from_json(rec));
      }
      if (row.contains("failure") && !row["failure"].is_null()) {
        part.failure = FailureRow::from_json(row["failure"]);
      }
      // first write wins; replays of an uncommitted batch are identical
      rows_by_chunk.emplace(part.chunk_id, std::move(part));
    }
  }
}

RunResult collect_result(const Session& s, RunStatus status) {
  std::map<std::string, PartRow> rows;
  load_parts(s.paths.parts_dir(), rows);
  RunResult result;
  result.run_id = s.run_id;
  result.status = status;
  result.run_dir = s.paths.run_dir;
  result.ledger = s.ledger->snapshot();
  result.provider_sends = s.gateway->send_count();
  for (auto& [chunk_id, row] : rows) {
    for (auto& rec : row.records) result.records.push_back(std::move(rec));
    if (row.failure) result.failures.push_back(std::move(*row.failure));
  }
  return result;
}

void run_batches(Session& s, const ExecutorHooks& hooks, RunResult& out) {
  std::vector<Chunk> remaining;
  for (const auto& chunk : s.kept) {
    if (s.completed.count(chunk.chunk_id) == 0) remaining.push_back(chunk);
  }

  const auto batch_size = static_cast<std::size_t>(s.cfg.batch_size);
  std::size_t batch_start = 0;
  bool halted = false;

  while (batch_start < remaining.size() && !halted) {
    std::size_t batch_end =
        std::min(batch_start + batch_size, remaining.size());
    std::size_t count = batch_end - batch_start;

    std::vector<std::optional<ChunkOutcome>> outcomes(count);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> budget_halt{false};
    std::exception_ptr worker_error;
    std::mutex error_mu;

    auto worker = [&] {
      while (true) {
        if (budget_halt.load()) break;
        std::size_t idx = next.fetch_add(1);
        if (idx >= count) break;
        try {
          ChunkOutcome outcome = process_chunk(
              remaining[batch_start + idx], s.schema, s.cfg, *s.gateway,
              s.cache.get(), *s.ledger, s.pricing, "extractor");
          if (outcome.halted) {
            budget_halt.store(true);
          } else {
            outcomes[idx] = std::move(outcome);
          }
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!worker_error) worker_error = std::current_exception();
          budget_halt.store(true);
        }
      }
    };

    std::size_t n_workers =
        std::min(static_cast<std::size_t>(s.cfg.concurrency), count);
    std::vector<std::thread> threads;
    threads.reserve(n_workers);
    for (std::size_t i = 0; i < n_workers; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (worker_error) std::rethrow_exception(worker_error);

    // Commit the batch: part file, audit lines, then the checkpoint.
    // A hard crash between audit append and checkpoint write can leave the
    // audit log ahead of the ledger by one batch; the audit log records
    // money actually spent, the ledger is the checkpointed floor.
    std::vector<nlohmann::json> part_lines;
    std::vector<nlohmann::json> audit_lines;
    for (const auto& outcome : outcomes) {
      if (!outcome) continue;
      nlohmann::json recs = nlohmann::json::array();
      for (const auto& rec : outcome->records) recs.push_back(record_to_json(rec));
      part_lines.push_back(nlohmann::json{
          {"chunk_id", outcome->chunk_id},
          {"records", std::move(recs)},
          {"failure",
           outcome->failure ? outcome->failure->to_json() : nlohmann::json()}});
      audit_lines.push_back(outcome->audit.to_json());
      s.completed.insert(outcome->chunk_id);
    }

    if (!part_lines.empty()) {
      char name[48];
      std::snprintf(name, sizeof name, "part_%03d_%05zu.jsonl",
                    s.session_index, s.batch_cursor);
      write_file_atomic(s.paths.parts_dir() / name, to_jsonl(part_lines));
      for (const auto& line : audit_lines) {
        append_line(s.paths.audit_log(), line.dump());
      }
    }
    s.batch_cursor += 1;
    write_checkpoint(s);

    if (budget_halt.load()) {
      halted = true;
      break;
    }
    if (hooks.after_batch && !hooks.after_batch(s.batch_cursor)) {
      out = collect_result(s, RunStatus::interrupted);
      return;  // simulated kill: no consolidation, no manifest finalize
    }
    batch_start = batch_end;
  }

  if (halted) {
    write_manifest(s, RunStatus::halted_budget, /*finalize=*/true);
    out = collect_result(s, RunStatus::halted_budget);
    return;
  }

  consolidate_run(s.paths.run_dir);
  write_manifest(s, RunStatus::complete, /*finalize=*/true);
  out = collect_result(s, RunStatus::complete);
}

Session open_session(const RunConfig& cfg, const RunOptions& opts) {
  Session s;
  s.cfg = cfg;
  s.schema = cfg.load_schema();
  s.pricing = cfg.pricing();
  // Fail fast: a run that cannot price its calls should not start.
  s.pricing.lookup(cfg.provider_id, cfg.model_id);
  s.gateway = opts.gateway ? opts.gateway : build_gateway(cfg);
  if (cfg.cache_enabled) {
    s.cache = opts.cache ? opts.cache
                         : std::shared_ptr<CacheStore>(
                               open_cache(cfg.cache_backend,
                                          cfg.workspace / "cache"));
  } else if (opts.cache) {
    s.cache = opts.cache;
  }
  s.ledger = std::make_shared<CostLedger>(cfg.budget);
  s.identity_digest = cfg.identity_digest();
  s.overrides = opts.overrides;

  auto docs = load_documents(cfg.data_source, cfg.format, cfg.text_column);
  s.doc_count = docs.size();
  std::vector<Chunk> chunks;
  for (const auto& doc : docs) {
    auto doc_chunks = split(doc, cfg.split_strategy);
    chunks.insert(chunks.end(), doc_chunks.begin(), doc_chunks.end());
  }
  s.total_chunks = chunks.size();
  FilterResult filtered = apply_relevance(cfg, chunks);
  s.kept = std::move(filtered.kept);
  s.dropped = filtered.dropped_count;
  return s;
}

}  // namespace

CallResult cached_call(const ProviderRequest& req, const RetryPolicy& retry,
                       Gateway& gateway, CacheStore* cache, CostLedger& ledger,
                       const PricingTable& pricing, const std::string& role) {
  CallResult out;
  std::string key = req.digest();
  if (cache != nullptr) {
    if (auto entry = cache->get(key)) {
      ledger.record_cached(entry->usage, role);
      out.body = entry->body;
      out.usage = entry->usage;
      out.cache_hit = true;
      return out;
    }
  }

  TokenUsage estimate_usage;
  estimate_usage.input_tokens =
      approx_tokens(req.system_prompt) + approx_tokens(req.user_prompt);
  estimate_usage.output_tokens = req.params.max_output_tokens;
  estimate_usage.estimated = true;
  Currency estimate =
      call_cost(estimate_usage, pricing, req.provider_id, req.model_id);
  if (!ledger.try_reserve(estimate)) {
    out.halted = true;
    return out;
  }

  ProviderResponse resp;
  try {
    resp = gateway.send(req, retry);
  } catch (...) {
    ledger.release(estimate);
    throw;
  }

  Currency actual = call_cost(resp.usage, pricing, req.provider_id, req.model_id);
  ledger.settle(estimate, actual, resp.usage, role);
  if (cache != nullptr) {
    cache->put(CacheEntry{key, resp.body, resp.usage, now_iso8601_utc(),
                          req.schema_digest});
  }
  out.body = resp.body;
  out.usage = resp.usage;
  out.cost = actual;
  out.attempts = resp.attempts;
  return out;
}

ChunkOutcome process_chunk(const Chunk& chunk, const ExtractionSchema& schema,
                           const RunConfig& cfg, Gateway& gateway,
                           CacheStore* cache, CostLedger& ledger,
                           const PricingTable& pricing,
                           const std::string& role) {
  ProviderRequest req;
  req.provider_id = cfg.provider_id;
  req.model_id = cfg.model_id;
  req.system_prompt = schema.system_prompt;
  req.user_prompt = render_prompt(schema, chunk.text);
  req.schema_digest = schema.digest;
  req.params = cfg.params;
  {
    nlohmann::json canonical = schema.to_canonical_json();
    req.schema_description = {{"name", canonical["name"]},
                              {"container", canonical["container"]},
                              {"fields", canonical["fields"]}};
  }

  ChunkOutcome out;
  out.chunk_id = chunk.chunk_id;
  out.audit.chunk_id = chunk.chunk_id;
  out.audit.role = role;

  CallResult call;
  try {
    call = cached_call(req, cfg.retry, gateway, cache, ledger, pricing, role);
  } catch (const Error& e) {
    out.failure = FailureRow{chunk.chunk_id, "provider",
                             std::string(errc_name(e.code())) + ": " + e.what(),
                             ""};
    out.audit.outcome = std::string("provider-error:") + errc_name(e.code());
    return out;
  }
  if (call.halted) {
    out.halted = true;
    return out;
  }
  out.audit.cache_hit = call.cache_hit;
  out.audit.attempts = call.attempts;
  out.audit.usage = call.usage;
  out.audit.cost = call.cost;

  Coercion mode = cfg.lenient_coercion ? Coercion::lenient : Coercion::strict;
  ValidationOutcome validated =
      validate_output(schema, call.body, chunk.chunk_id, mode);
  if (validated.ok) {
    out.records = std::move(validated.records);
    out.audit.outcome = "ok";
  } else {
    out.failure = FailureRow{chunk.chunk_id, "validation",
                             validated.failure.summary(), call.body};
    out.audit.outcome = "validation-failure";
  }
  return out;
}

RunResult run_extraction(const RunConfig& cfg, const RunOptions& opts) {
  Session s = open_session(cfg, opts);
  s.run_id = opts.run_id.empty()
                 ? derive_run_id(cfg.workspace, s.identity_digest)
                 : opts.run_id;
  s.paths = RunPaths::for_run(cfg.workspace, s.run_id);
  if (fsys::exists(s.paths.checkpoint())) {
    raise(Errc::config, "run '" + s.run_id +
                            "' already exists; resume it or pick another id");
  }

  fsys::create_directories(s.paths.parts_dir());
  fsys::create_directories(s.paths.checkpoint().parent_path());
  write_file_atomic(s.paths.config_snapshot(),
                    canonical_json(cfg.to_json()));
  write_file_atomic(s.paths.schema_snapshot(), s.schema.serialize());
  std::vector<std::string> kept_ids;
  kept_ids.reserve(s.kept.size());
  for (const auto& c : s.kept) kept_ids.push_back(c.chunk_id);
  std::sort(kept_ids.begin(), kept_ids.end());
  write_file_atomic(s.paths.plan(),
                    nlohmann::json{{"kept_chunk_ids", kept_ids},
                                   {"total_chunks", s.total_chunks},
                                   {"docs", s.doc_count},
                                   {"dropped", s.dropped}}
                        .dump());
  // Manifest exists before the first provider call.
  write_manifest(s, RunStatus::complete, /*finalize=*/false);
  write_checkpoint(s);

  RunResult result;
  run_batches(s, opts.hooks, result);
  return result;
}

RunResult resume_extraction(const fsys::path& workspace,
                            const std::string& run_id,
                            std::optional<Currency> budget_override,
                            const RunOptions& opts) {
  RunPaths paths = RunPaths::for_run(workspace, run_id);
  if (!fsys::exists(paths.checkpoint()) ||
      !fsys::exists(paths.config_snapshot())) {
    raise(Errc::missing_checkpoint,
          "no resumable checkpoint under " + paths.run_dir.string());
  }
  auto snapshot = nlohmann::json::parse(read_file(paths.config_snapshot()),
                                        nullptr, false);
  if (snapshot.is_discarded()) {
    raise(Errc::store, "corrupt config snapshot: " +
                           paths.config_snapshot().string());
  }
  RunConfig cfg = RunConfig::from_json(snapshot, paths.run_dir);
  Checkpoint cp = Checkpoint::from_json(nlohmann::json::parse(
      read_file(paths.checkpoint())));

  if (cfg.identity_digest() != cp.config_digest) {
    raise(Errc::digest_mismatch,
          "configuration drifted since the checkpoint; refusing to resume");
  }
  std::vector<std::string> overrides = opts.overrides;
  if (budget_override) {
    cfg.budget = budget_override;
    overrides.push_back("budget=" + budget_override->str());
  }

  RunOptions session_opts = opts;
  session_opts.overrides = overrides;
  Session s = open_session(cfg, session_opts);
  s.run_id = run_id;
  s.paths = paths;
  s.completed = cp.completed;
  s.batch_cursor = cp.batch_cursor;
  s.session_index = cp.session + 1;
  s.ledger->restore(cp.ledger);
  s.ledger->set_budget(cfg.budget);

  write_manifest(s, RunStatus::complete, /*finalize=*/false);

  RunResult result;
  run_batches(s, opts.hooks, result);
  return result;
}

void consolidate_run(const fsys::path& run_dir) {
  RunPaths paths{run_dir};
  if (!fsys::exists(paths.plan())) {
    raise(Errc::incomplete_run, "no run plan under " + run_dir.string());
  }
  auto plan = nlohmann::json::parse(read_file(paths.plan()));
  std::set<std::string> kept;
  for (const auto& id : plan.at("kept_chunk_ids")) {
    kept.insert(id.get<std::string>());
  }

  std::map<std::string, PartRow> rows;
  load_parts(paths.parts_dir(), rows);
  for (const auto& id : kept) {
    if (rows.count(id) == 0) {
      raise(Errc::incomplete_run,
            "chunk '" + id + "' has no recorded outcome; run is incomplete");
    }
  }

  std::vector<nlohmann::json> record_lines;
  std::vector<nlohmann::json> failure_lines;
  for (const auto& [chunk_id, row] : rows) {
    if (kept.count(chunk_id) == 0) continue;
    for (const auto& rec : row.records) {
      record_lines.push_back(record_to_json(rec));
    }
    if (row.failure) failure_lines.push_back(row.failure->to_json());
  }
  write_file_atomic(paths.records(), to_jsonl(record_lines));
  write_file_atomic(paths.failures(), to_jsonl(failure_lines));

  if (fsys::exists(paths.checkpoint())) {
    auto cp = Checkpoint::from_json(
        nlohmann::json::parse(read_file(paths.checkpoint())));
    write_file_atomic(paths.ledger(), cp.ledger.dump(2));
  }
}

}  // namespace glean

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "glean/cache.hpp"
#include "glean/canonical.hpp"
#include "glean/config.hpp"
#include "glean/cost.hpp"
#include "glean/errors.hpp"
#include "glean/evaluation.hpp"
#include "glean/executor.hpp"
#include "glean/fs.hpp"
#include "glean/ingest.hpp"
#include "glean/lilpro.hpp"
#include "glean/pareto.hpp"
#include "glean/report.hpp"
#include "glean/schema.hpp"

namespace fsys = std::filesystem;
using namespace glean;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUserError = 1;
constexpr int kExitInternal = 2;
constexpr int kExitBudgetHalt = 3;

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case Errc::internal:
    case Errc::store:
    case Errc::conflict:
      return kExitInternal;
    default:
      return kExitUserError;
  }
}

struct CommonFlags {
  std::string config_path;
  std::optional<std::string> budget;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> workspace;
  std::vector<std::string> overrides;  // recorded into the manifest
};

RunConfig load_config(CommonFlags& flags) {
  RunConfig cfg = RunConfig::load_file(flags.config_path);
  if (flags.budget) {
    cfg.budget = Currency::parse(*flags.budget);
    flags.overrides.push_back("budget=" + cfg.budget->str());
  }
  if (flags.seed) {
    cfg.seed = *flags.seed;
    flags.overrides.push_back("seed=" + std::to_string(cfg.seed));
  }
  if (flags.workspace) {
    cfg.workspace = fsys::absolute(*flags.workspace).lexically_normal();
    flags.overrides.push_back("workspace=" + cfg.workspace.string());
  }
  return cfg;
}

void print_dry_run(const RunConfig& cfg) {
  ExtractionSchema schema = cfg.load_schema();
  PricingTable pricing = cfg.pricing();
  auto chunks = load_and_chunk(cfg);
  FilterResult filtered = apply_relevance(cfg, chunks);

  std::int64_t input_tokens = 0;
  for (const auto& chunk : filtered.kept) {
    input_tokens += approx_tokens(schema.system_prompt) +
                    approx_tokens(render_prompt(schema, chunk.text));
  }
  std::int64_t output_bound =
      cfg.params.max_output_tokens *
      static_cast<std::int64_t>(filtered.kept.size());
  TokenUsage bound{input_tokens, output_bound, true};
  Currency projected =
      call_cost(bound, pricing, cfg.provider_id, cfg.model_id);

  std::printf("schema            %s (%s…)\n", schema.schema_name.c_str(),
              schema.digest.substr(0, 12).c_str());
  std::printf("chunks            %zu total, %zu kept, %zu dropped\n",
              chunks.size(), filtered.kept.size(), filtered.dropped_count);
  std::printf("input tokens      %lld (chars/4 approximation)\n",
              static_cast<long long>(input_tokens));
  std::printf("output tokens     <= %lld (max_output_tokens bound)\n",
              static_cast<long long>(output_bound));
  std::printf("projected cost    <= %s (%s/%s)\n", projected.str().c_str(),
              cfg.provider_id.c_str(), cfg.model_id.c_str());
  if (cfg.budget) {
    std::printf("budget            %s -> %s\n", cfg.budget->str().c_str(),
                projected <= *cfg.budget ? "fits" : "would halt");
  }
}

int report_run(const RunResult& result) {
  std::printf("run %s: %s\n", result.run_id.c_str(),
              run_status_name(result.status));
  std::printf("  records   %zu\n", result.records.size());
  std::printf("  failures  %zu\n", result.failures.size());
  std::printf("  cost      %s (%lld calls, %lld cached)\n",
              result.ledger.value("total_cost", "0").c_str(),
              result.ledger.value("calls", 0LL),
              result.ledger.value("calls_served_from_cache", 0LL));
  std::printf("  outputs   %s\n", result.run_dir.string().c_str());
  if (result.status == RunStatus::halted_budget) {
    std::printf(
        "budget halt: checkpoint saved at %s\n"
        "resume with: glean resume --workspace %s --run-id %s --budget "
        "<raised>\n",
        (result.run_dir / "checkpoint" / "checkpoint.json").string().c_str(),
        result.run_dir.parent_path().parent_path().string().c_str(),
        result.run_id.c_str());
    return kExitBudgetHalt;
  }
  return kExitOk;
}

int cmd_extract(CommonFlags& flags, const std::string& run_id, bool dry_run) {
  RunConfig cfg = load_config(flags);
  if (dry_run) {
    print_dry_run(cfg);
    return kExitOk;
  }
  RunOptions opts;
  opts.run_id = run_id;
  if (!run_id.empty()) flags.overrides.push_back("run_id=" + run_id);
  opts.overrides = flags.overrides;
  return report_run(run_extraction(cfg, opts));
}

int cmd_resume(const std::string& workspace, const std::string& run_id,
               const std::optional<std::string>& budget) {
  std::optional<Currency> budget_override;
  if (budget) budget_override = Currency::parse(*budget);
  fsys::path ws = fsys::absolute(workspace).lexically_normal();
  return report_run(resume_extraction(ws, run_id, budget_override));
}

std::vector<Prediction> predictions_from_records(
    const std::vector<nlohmann::json>& records, const std::string& field,
    bool by_doc, bool first_only) {
  std::vector<Prediction> preds;
  std::set<std::string> seen;
  for (const auto& rec : records) {
    const auto& values = rec.at("values");
    auto it = values.find(field);
    if (it == values.end()) continue;
    std::string id = rec.at("chunk_id").get<std::string>();
    if (by_doc) id = chunk_doc_id(id);
    if (first_only && !seen.insert(id).second) continue;
    preds.push_back({id, *it});
  }
  return preds;
}

int cmd_evaluate(const std::string& run_dir, const std::string& labels_path,
                 const std::string& field, const std::string& metrics,
                 const std::string& positive, bool by_doc,
                 const std::string& out_path) {
  fsys::path run(run_dir);
  fsys::path records_file = fsys::is_directory(run) ? run / "records.jsonl" : run;
  if (!fsys::exists(records_file)) {
    raise(Errc::io, "no records at " + records_file.string());
  }
  auto records = read_jsonl(records_file);
  LabeledDataset labels = load_labels(labels_path);

  std::vector<Prediction> refs_one, refs_mentions;
  {
    std::set<std::string> seen;
    for (const auto& item : labels.items) {
      if (item.field != field) continue;
      refs_mentions.push_back({item.id, item.value});
      if (seen.insert(item.id).second) {
        refs_one.push_back({item.id, item.value});
      }
    }
  }
  if (refs_mentions.empty()) {
    raise(Errc::alignment, "labels carry no rows for field '" + field + "'");
  }

  std::vector<MetricReport> reports;
  std::string wanted = "," + metrics + ",";
  auto has = [&](const char* name) {
    return wanted.find("," + std::string(name) + ",") != std::string::npos;
  };

  if (has("classification")) {
    auto preds = predictions_from_records(records, field, by_doc, true);
    // classification needs a prediction for every labeled id
    std::map<std::string, Prediction> by_id;
    for (auto& p : preds) by_id.emplace(p.id, p);
    std::vector<Prediction> aligned;
    for (const auto& ref : refs_one) {
      auto it = by_id.find(ref.id);
      aligned.push_back(it != by_id.end() ? it->second
                                          : Prediction{ref.id, nullptr});
    }
    nlohmann::json pos = positive.empty() ? nlohmann::json(true)
                                          : nlohmann::json(positive);
    auto rep = classification_metrics(aligned, refs_one, pos);
    reports.push_back({"accuracy", field, rep.accuracy});
    reports.push_back({"precision", field, rep.precision});
    reports.push_back({"recall", field, rep.recall});
    reports.push_back({"f1", field, rep.f1});
  }
  if (has("regression")) {
    auto preds = predictions_from_records(records, field, by_doc, true);
    std::map<std::string, Prediction> by_id;
    for (auto& p : preds) by_id.emplace(p.id, p);
    std::vector<Prediction> aligned_preds, aligned_refs;
    for (const auto& ref : refs_one) {
      auto it = by_id.find(ref.id);
      if (it != by_id.end() && it->second.value.is_number() &&
          ref.value.is_number()) {
        aligned_preds.push_back(it->second);
        aligned_refs.push_back(ref);
      }
    }
    auto rep = regression_metrics(aligned_preds, aligned_refs);
    reports.push_back({"mae", field, rep.mae});
    reports.push_back({"r2", field, rep.r2});
  }
  if (has("presence")) {
    auto extracted = predictions_from_records(records, field, by_doc, false);
    reports.push_back({"presence", field, presence_metric(extracted, refs_one)});
  }
  if (has("recall_mentions")) {
    auto extracted = predictions_from_records(records, field, by_doc, false);
    double recall = recall_on_field(extracted, refs_mentions);
    reports.push_back(
        {"recall_mentions", field,
         MetricValue{recall, "",
                     static_cast<std::int64_t>(refs_mentions.size())}});
  }

  std::string table = reports_to_table(reports);
  std::fputs(table.c_str(), stdout);
  if (!out_path.empty()) {
    write_file_atomic(out_path, reports_to_json(reports).dump(2));
    std::printf("report written to %s\n", out_path.c_str());
  }
  return kExitOk;
}

int cmd_estimate_cost(CommonFlags& flags) {
  RunConfig cfg = load_config(flags);
  print_dry_run(cfg);
  return kExitOk;
}

int cmd_pareto(CommonFlags& flags, const std::string& keywords_path,
               std::size_t max_k, const std::string& field,
               const std::string& labels_path, const std::string& out_csv,
               const std::string& out_svg) {
  SweepRequest req;
  req.cfg = load_config(flags);
  req.field = field.empty() ? req.cfg.target_field : field;
  if (req.field.empty()) {
    raise(Errc::config, "pareto needs --field or target_field in the config");
  }
  fsys::path labels =
      labels_path.empty() ? req.cfg.labels_path : fsys::path(labels_path);
  if (labels.empty()) {
    raise(Errc::config, "pareto needs --labels or labels in the config");
  }
  req.labels = load_labels(labels);
  req.train_fraction = req.cfg.train_fraction;

  req.candidates = read_lines(keywords_path);
  if (req.candidates.empty()) {
    raise(Errc::config, "keyword candidate file is empty");
  }
  req.max_k = max_k == 0 ? req.candidates.size() : max_k;

  fsys::path sweep_dir =
      req.cfg.workspace / "sweeps" /
      ("s" + req.cfg.identity_digest().substr(0, 12));
  fsys::create_directories(sweep_dir);
  write_file_atomic(sweep_dir / "manifest.json",
                    nlohmann::json{{"kind", "pareto"},
                                   {"status", "running"},
                                   {"field", req.field},
                                   {"candidates", req.candidates},
                                   {"max_k", req.max_k},
                                   {"config_digest", req.cfg.identity_digest()},
                                   {"updated_at", now_iso8601_utc()}}
                        .dump(2));

  SweepOutcome outcome = run_sweep(req);

  write_file_atomic(sweep_dir / "points.json", outcome.to_json().dump(2));
  std::string csv = frontier_csv(outcome);
  write_file_atomic(sweep_dir / "frontier.csv", csv);
  if (!out_csv.empty()) write_file_atomic(out_csv, csv);
  if (!out_svg.empty()) write_file_atomic(out_svg, frontier_svg(outcome));
  write_file_atomic(sweep_dir / "manifest.json",
                    nlohmann::json{{"kind", "pareto"},
                                   {"status", "complete"},
                                   {"field", req.field},
                                   {"candidates", req.candidates},
                                   {"max_k", req.max_k},
                                   {"config_digest", req.cfg.identity_digest()},
                                   {"costs", outcome.ledger},
                                   {"updated_at", now_iso8601_utc()}}
                        .dump(2));

  for (const auto& p : outcome.points) {
    std::printf("k=%zu  recall(train)=%.4f recall(test)=%.4f  "
                "norm_cost(train)=%.4f norm_cost(test)=%.4f\n",
                p.k, p.recall_train, p.recall_test, p.norm_cost_train,
                p.norm_cost_test);
  }
  std::printf("fit train: a=%.6f b=%.6f c=%.6f%s\n", outcome.fit_train.a,
              outcome.fit_train.b, outcome.fit_train.c,
              outcome.fit_train.constraint_active ? " (a<=0 active)" : "");
  std::printf("fit test:  a=%.6f b=%.6f c=%.6f%s\n", outcome.fit_test.a,
              outcome.fit_test.b, outcome.fit_test.c,
              outcome.fit_test.constraint_active ? " (a<=0 active)" : "");
  std::printf("sweep outputs in %s\n", sweep_dir.string().c_str());
  return kExitOk;
}

int cmd_lilpro(CommonFlags& flags, const std::string& field,
               const std::string& p0_path, const std::string& meta_path,
               std::size_t batch_size, std::size_t batches,
               std::size_t error_budget, std::optional<std::uint64_t> seed,
               const std::string& selection, const std::string& labels_path,
               const std::string& out_path) {
  LilproRunRequest req;
  req.cfg = load_config(flags);
  req.field = field.empty() ? req.cfg.target_field : field;
  if (req.field.empty()) {
    raise(Errc::config, "lilpro needs --field or target_field in the config");
  }
  req.p0 = read_file(p0_path);
  req.meta = MetaPrompt::load_file(meta_path);
  req.lilpro.batch_size = batch_size;
  req.lilpro.batches = batches;
  req.lilpro.error_budget = error_budget;
  req.lilpro.seed = seed.value_or(req.cfg.seed);
  if (selection == "argmax_mt") {
    req.lilpro.selection = LilproConfig::Selection::argmax_mt;
  } else if (selection != "final_pt") {
    raise(Errc::config, "selection must be final_pt or argmax_mt");
  }
  fsys::path labels =
      labels_path.empty() ? req.cfg.labels_path : fsys::path(labels_path);
  if (labels.empty()) {
    raise(Errc::config, "lilpro needs --labels or labels in the config");
  }
  req.labels = load_labels(labels);

  LilproRunResult run = run_lilpro_driver(req);
  if (!out_path.empty()) {
    write_file_atomic(out_path, trajectory_jsonl(run.result.trajectory));
  }

  for (const auto& state : run.result.trajectory) {
    std::printf("t=%zu  m_t=%.4f  presence=%.4f  errors=%zu\n", state.t,
                state.batch_score, state.presence_precision,
                state.error_count);
  }
  std::printf("final prompt (%zu chars) in %s\n",
              run.result.final_prompt.size(),
              (run.out_dir / "final_prompt.txt").string().c_str());
  std::printf("trajectory: %s\n",
              (out_path.empty() ? (run.out_dir / "trajectory.jsonl").string()
                                : out_path)
                  .c_str());
  std::printf("cost: %s\n", run.ledger.value("total_cost", "0").c_str());
  return kExitOk;
}

int cmd_cache(const std::string& action, const std::string& workspace,
              const std::string& backend, const std::string& out_path,
              const std::string& before) {
  fsys::path cache_dir = fsys::path(workspace) / "cache";
  auto store = open_cache(backend, cache_dir);
  if (action == "stats") {
    CacheStats stats = store->stats();
    std::printf("entries  %lld\n", static_cast<long long>(stats.entries));
    std::printf("bytes    %lld\n", static_cast<long long>(stats.bytes));
    std::printf("hits     %lld (this process)\n",
                static_cast<long long>(stats.hits));
    std::printf("misses   %lld (this process)\n",
                static_cast<long long>(stats.misses));
    return kExitOk;
  }
  if (action == "export") {
    std::string jsonl;
    store->for_each([&](const CacheEntry& e) {
      jsonl += nlohmann::json{{"key", e.key},
                              {"body", e.body},
                              {"input_tokens", e.usage.input_tokens},
                              {"output_tokens", e.usage.output_tokens},
                              {"estimated", e.usage.estimated},
                              {"created_at", e.created_at},
                              {"schema_digest", e.schema_digest}}
                   .dump();
      jsonl.push_back('\n');
    });
    if (out_path.empty()) {
      std::fputs(jsonl.c_str(), stdout);
    } else {
      write_file_atomic(out_path, jsonl);
      std::printf("cache exported to %s\n", out_path.c_str());
    }
    return kExitOk;
  }
  if (action == "prune") {
    if (before.empty()) {
      raise(Errc::config, "cache prune needs --before <ISO date>");
    }
    std::int64_t removed = store->prune_before(before);
    std::printf("pruned %lld entries created before %s\n",
                static_cast<long long>(removed), before.c_str());
    return kExitOk;
  }
  raise(Errc::config, "unknown cache action: " + action);
}

int cmd_export(const std::string& kind, const std::string& in_path,
               const std::string& out_csv, const std::string& out_svg) {
  if (kind == "frontier") {
    fsys::path in(in_path);
    fsys::path points = fsys::is_directory(in) ? in / "points.json" : in;
    if (!fsys::exists(points)) {
      raise(Errc::io, "no frontier artifacts at " + points.string());
    }
    auto doc = nlohmann::json::parse(read_file(points));
    SweepOutcome outcome;
    for (const auto& p : doc.at("points")) {
      ParetoPoint point;
      point.k = p.at("k").get<std::size_t>();
      for (const auto& kw : p.at("keywords")) {
        point.keywords.push_back(kw.get<std::string>());
      }
      point.recall_train = p.at("recall_train").get<double>();
      point.recall_test = p.at("recall_test").get<double>();
      point.cost_train = Currency::parse(p.at("cost_train").get<std::string>());
      point.cost_test = Currency::parse(p.at("cost_test").get<std::string>());
      point.norm_cost_train = p.at("norm_cost_train").get<double>();
      point.norm_cost_test = p.at("norm_cost_test").get<double>();
      outcome.points.push_back(std::move(point));
    }
    auto fit_from = [&](const char* key) {
      const auto& f = doc.at(key);
      return QuadraticFit{f.at("a").get<double>(), f.at("b").get<double>(),
                          f.at("c").get<double>(),
                          f.at("constraint_active").get<bool>()};
    };
    outcome.fit_train = fit_from("fit_train");
    outcome.fit_test = fit_from("fit_test");
    write_file_atomic(out_csv, frontier_csv(outcome));
    if (!out_svg.empty()) write_file_atomic(out_svg, frontier_svg(outcome));
    std::printf("frontier exported to %s\n", out_csv.c_str());
    return kExitOk;
  }
  if (kind == "trajectory") {
    fsys::path in(in_path);
    fsys::path traj = fsys::is_directory(in) ? in / "trajectory.jsonl" : in;
    if (!fsys::exists(traj)) {
      raise(Errc::io, "no trajectory artifacts at " + traj.string());
    }
    std::vector<PromptState> trajectory;
    for (const auto& row : read_jsonl(traj)) {
      PromptState s;
      s.t = row.at("t").get<std::size_t>();
      s.prompt = row.at("prompt").get<std::string>();
      s.batch_score = row.at("batch_score").get<double>();
      s.error_count = row.at("error_count").get<std::size_t>();
      s.presence_precision = row.at("presence_precision").get<double>();
      trajectory.push_back(std::move(s));
    }
    write_file_atomic(out_csv, trajectory_csv(trajectory));
    if (!out_svg.empty()) {
      write_file_atomic(out_svg, trajectory_svg(trajectory));
    }
    std::printf("trajectory exported to %s\n", out_csv.c_str());
    return kExitOk;
  }
  raise(Errc::config, "export kind must be frontier or trajectory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"schema-validated LLM data extraction toolkit"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string run_id, workspace = "workspace", backend = "sqlite";
  std::string field, labels, positive, metrics = "presence,recall_mentions";
  std::string out_path, out_svg, before, kind, in_path, selection = "final_pt";
  std::string p0_path, meta_path, keywords_path, run_dir;
  bool dry_run = false, by_doc = false;
  std::size_t max_k = 0, batch_size = 8, batches = 20, error_budget = 3;
  std::optional<std::string> budget_flag;
  std::optional<std::uint64_t> seed_flag;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", flags.config_path, "run config file")
        ->required();
    cmd->add_option_function<std::string>(
        "--budget", [&](const std::string& v) { flags.budget = v; },
        "budget override (decimal)");
    cmd->add_option_function<std::uint64_t>(
        "--seed", [&](std::uint64_t v) { flags.seed = v; }, "seed override");
    cmd->add_option_function<std::string>(
        "--workspace", [&](const std::string& v) { flags.workspace = v; },
        "workspace override");
  };

  auto* extract = app.add_subcommand("extract", "run the extraction pipeline");
  add_common(extract);
  extract->add_option("--run-id", run_id, "explicit run id");
  extract->add_flag("--dry-run", dry_run,
                    "load/split/filter and estimate cost; zero provider sends");

  auto* resume = app.add_subcommand("resume", "resume a checkpointed run");
  resume->add_option("--workspace", workspace, "workspace directory")
      ->required();
  resume->add_option("--run-id", run_id, "run to resume")->required();
  resume->add_option_function<std::string>(
      "--budget", [&](const std::string& v) { budget_flag = v; },
      "raised budget for the resumed run");

  auto* evaluate = app.add_subcommand("evaluate", "score a run against labels");
  evaluate->add_option("--run", run_dir, "run directory (or records.jsonl)")
      ->required();
  evaluate->add_option("--labels", labels, "labels JSONL")->required();
  evaluate->add_option("--field", field, "field to score")->required();
  evaluate->add_option("--metrics", metrics,
                       "comma list: classification,regression,presence,"
                       "recall_mentions");
  evaluate->add_option("--positive", positive,
                       "positive class for classification (default: true)");
  evaluate->add_flag("--by-doc", by_doc, "aggregate predictions per document");
  evaluate->add_option("--out", out_path, "write the JSON report here");

  auto* estimate = app.add_subcommand("estimate-cost",
                                      "project the cost of a configuration");
  add_common(estimate);

  auto* pareto = app.add_subcommand(
      "pareto", "greedy keyword sweep with cost/recall frontier");
  add_common(pareto);
  pareto->add_option("--keywords", keywords_path,
                     "candidate keywords, one per line")
      ->required();
  pareto->add_option("--max-k", max_k, "largest keyword set size");
  pareto->add_option("--field", field, "recall field");
  pareto->add_option("--labels", labels, "mention labels JSONL");
  pareto->add_option("--out", out_path, "frontier CSV path");
  pareto->add_option("--svg", out_svg, "frontier SVG path");

  auto* lilpro_cmd =
      app.add_subcommand("lilpro", "optimizer-in-the-loop prompt refinement");
  add_common(lilpro_cmd);
  lilpro_cmd->add_option("--field", field, "target field");
  lilpro_cmd->add_option("--p0", p0_path, "initial prompt template file")
      ->required();
  lilpro_cmd->add_option("--meta", meta_path, "meta prompt template file")
      ->required();
  lilpro_cmd->add_option("-B,--batch-size", batch_size, "batch size");
  lilpro_cmd->add_option("-T,--batches", batches, "batch count");
  lilpro_cmd->add_option("-k,--error-budget", error_budget,
                         "curated errors per batch");
  lilpro_cmd->add_option_function<std::uint64_t>(
      "--lilpro-seed", [&](std::uint64_t v) { seed_flag = v; },
      "sampler seed (defaults to the config seed)");
  lilpro_cmd->add_option("--selection", selection, "final_pt | argmax_mt");
  lilpro_cmd->add_option("--labels", labels, "reference labels JSONL");
  lilpro_cmd->add_option("--out", out_path, "trajectory JSONL path");

  auto* cache_cmd = app.add_subcommand("cache", "inspect the response cache");
  std::string cache_action;
  cache_cmd->add_option("action", cache_action, "stats | export | prune")
      ->required();
  cache_cmd->add_option("--workspace", workspace, "workspace directory");
  cache_cmd->add_option("--backend", backend, "sqlite | dir | memory");
  cache_cmd->add_option("--out", out_path, "export destination");
  cache_cmd->add_option("--before", before, "prune cutoff (ISO date)");

  auto* export_cmd =
      app.add_subcommand("export", "emit figure data as CSV (+ SVG)");
  export_cmd->add_option("--kind", kind, "frontier | trajectory")->required();
  export_cmd->add_option("--in", in_path, "sweep dir / trajectory file")
      ->required();
  export_cmd->add_option("--out", out_path, "CSV destination")->required();
  export_cmd->add_option("--svg", out_svg, "SVG destination");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);  // CLI11 prints usage; nonzero on error
  }

  try {
    if (extract->parsed()) return cmd_extract(flags, run_id, dry_run);
    if (resume->parsed()) return cmd_resume(workspace, run_id, budget_flag);
    if (evaluate->parsed()) {
      return cmd_evaluate(run_dir, labels, field, metrics, positive, by_doc,
                          out_path);
    }
    if (estimate->parsed()) return cmd_estimate_cost(flags);
    if (pareto->parsed()) {
      return cmd_pareto(flags, keywords_path, max_k, field, labels, out_path,
                        out_svg);
    }
    if (lilpro_cmd->parsed()) {
      return cmd_lilpro(flags, field, p0_path, meta_path, batch_size, batches,
                        error_budget, seed_flag, selection, labels, out_path);
    }
    if (cache_cmd->parsed()) {
      return cmd_cache(cache_action, workspace, backend, out_path, before);
    }
    if (export_cmd->parsed()) return cmd_export(kind, in_path, out_path, out_svg);
  } catch (const Error& e) {
    std::fprintf(stderr, "error (%s): %s\n", errc_name(e.code()), e.what());
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kExitInternal;
  }
  return kExitUserError;
}

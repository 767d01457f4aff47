#include "glean/lilpro.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "glean/canonical.hpp"
#include "glean/errors.hpp"
#include "glean/executor.hpp"
#include "glean/fs.hpp"
#include "glean/text.hpp"

namespace glean {

nlohmann::json ErrorTriplet::to_json() const {
  return nlohmann::json{{"id", id},
                        {"input", input},
                        {"reference", reference},
                        {"prediction", prediction}};
}

nlohmann::json PromptState::to_json() const {
  nlohmann::json curated_json = nlohmann::json::array();
  for (const auto& t : curated) curated_json.push_back(t.to_json());
  return nlohmann::json{{"t", t},
                        {"prompt", prompt},
                        {"batch_score", batch_score},
                        {"error_count", error_count},
                        {"presence_precision", presence_precision},
                        {"curated", std::move(curated_json)}};
}

namespace {

std::size_t count_placeholder(const std::string& text,
                              const std::string& name) {
  std::string needle = "{" + name + "}";
  std::size_t count = 0;
  std::size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    ++count;
    pos += needle.size();
  }
  return count;
}

}  // namespace

MetaPrompt MetaPrompt::load(std::string text) {
  if (count_placeholder(text, "examples") != 1 ||
      count_placeholder(text, "prompt") != 1) {
    raise(Errc::template_error,
          "meta prompt must contain {examples} and {prompt} exactly once each");
  }
  return MetaPrompt{std::move(text)};
}

MetaPrompt MetaPrompt::load_file(const std::filesystem::path& path) {
  return load(read_file(path));
}

int phi_exact(const nlohmann::json& reference, const nlohmann::json& prediction,
              double numeric_tolerance) {
  if (prediction.is_null()) return reference.is_null() ? 1 : 0;
  if (reference.is_boolean()) {
    if (!prediction.is_boolean()) {
      raise(Errc::type_mismatch, "expected a boolean prediction");
    }
    return reference.get<bool>() == prediction.get<bool>() ? 1 : 0;
  }
  if (reference.is_number()) {
    if (!prediction.is_number()) {
      raise(Errc::type_mismatch, "expected a numeric prediction");
    }
    return std::abs(reference.get<double>() - prediction.get<double>()) <=
                   numeric_tolerance
               ? 1
               : 0;
  }
  if (reference.is_string()) {
    if (!prediction.is_string()) {
      raise(Errc::type_mismatch, "expected a string prediction");
    }
    return ascii_fold(reference.get<std::string>()) ==
                   ascii_fold(prediction.get<std::string>())
               ? 1
               : 0;
  }
  raise(Errc::type_mismatch,
        "unsupported reference value kind: " +
            std::string(reference.type_name()));
}

std::string build_meta_prompt(const MetaPrompt& meta, const std::string& prompt,
                              const std::vector<ErrorTriplet>& triplets) {
  const std::string& tmpl = meta.template_text;
  std::size_t examples_at = tmpl.find("{examples}");
  std::size_t prompt_at = tmpl.find("{prompt}");
  if (examples_at == std::string::npos || prompt_at == std::string::npos) {
    raise(Errc::template_error, "meta prompt is missing a placeholder");
  }

  std::string examples;
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    const auto& t = triplets[i];
    examples += "Example " + std::to_string(i + 1) + ":\n";
    examples += "Input: " + t.input + "\n";
    examples += "Reference: " + t.reference.dump() + "\n";
    examples += "Prediction: " +
                (t.prediction.is_null() ? std::string("(no valid extraction)")
                                        : t.prediction.dump()) +
                "\n\n";
  }
  if (!examples.empty()) examples.resize(examples.size() - 1);  // one trailing \n

  struct Slot {
    std::size_t begin;
    std::size_t end;
    const std::string* text;
  };
  std::vector<Slot> slots = {
      {examples_at, examples_at + 10, &examples},
      {prompt_at, prompt_at + 8, &prompt}};
  std::sort(slots.begin(), slots.end(),
            [](const Slot& a, const Slot& b) { return a.begin < b.begin; });

  std::string out;
  std::size_t cursor = 0;
  for (const auto& slot : slots) {
    out.append(tmpl, cursor, slot.begin - cursor);
    out += *slot.text;
    cursor = slot.end;
  }
  out.append(tmpl, cursor, tmpl.size() - cursor);
  return out;
}

namespace {

// Without-replacement sampler: draws span batches from one shuffled pool;
// when the pool runs dry it reshuffles afresh, skipping indices already in
// the current batch so a batch never repeats an item.
class BatchSampler {
 public:
  BatchSampler(std::size_t n, std::mt19937_64& rng) : n_(n), rng_(rng) {}

  std::vector<std::size_t> draw(std::size_t batch_size) {
    std::vector<std::size_t> batch;
    std::set<std::size_t> in_batch;
    while (batch.size() < batch_size) {
      if (pool_.empty()) refill();
      std::size_t idx = pool_.back();
      pool_.pop_back();
      if (in_batch.insert(idx).second) {
        batch.push_back(idx);
      }
    }
    return batch;
  }

 private:
  void refill() {
    pool_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) pool_[i] = i;
    for (std::size_t i = n_; i > 1; --i) {
      std::uint64_t j = bounded_uniform(rng_, i);
      std::swap(pool_[i - 1], pool_[j]);
    }
  }

  std::size_t n_;
  std::mt19937_64& rng_;
  std::vector<std::size_t> pool_;
};

}  // namespace

LilproResult run_lilpro(const std::vector<LilproItem>& dataset,
                        const ExtractorFn& extractor,
                        const OptimizerFn& optimizer, const std::string& p0,
                        const LilproConfig& cfg) {
  if (cfg.batch_size == 0 || cfg.batches == 0) {
    raise(Errc::config, "lilpro needs batch_size >= 1 and batches >= 1");
  }
  if (cfg.error_budget < 1) {
    raise(Errc::config, "lilpro error budget must be >= 1");
  }
  if (dataset.size() < cfg.batch_size) {
    raise(Errc::dataset_too_small,
          "dataset has " + std::to_string(dataset.size()) +
              " items; batch size is " + std::to_string(cfg.batch_size));
  }

  std::mt19937_64 rng(cfg.seed);
  BatchSampler sampler(dataset.size(), rng);

  LilproResult result;
  std::string prompt = p0;

  for (std::size_t t = 0; t < cfg.batches; ++t) {
    std::vector<std::size_t> batch = sampler.draw(cfg.batch_size);

    std::vector<nlohmann::json> predictions(batch.size());
    std::vector<int> phi(batch.size());
    double score_sum = 0.0;
    std::vector<std::size_t> errors;  // positions within the batch
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const LilproItem& item = dataset[batch[i]];
      predictions[i] = extractor(prompt, item);
      phi[i] = phi_exact(item.reference, predictions[i], cfg.numeric_tolerance);
      score_sum += phi[i];
      if (phi[i] == 0) errors.push_back(i);
    }

    PromptState state;
    state.t = t;
    state.prompt = prompt;
    state.batch_score = score_sum / static_cast<double>(cfg.batch_size);
    state.error_count = errors.size();

    {
      std::vector<Prediction> extracted, refs;
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const LilproItem& item = dataset[batch[i]];
        refs.push_back({item.id, item.reference});
        if (!predictions[i].is_null()) {
          extracted.push_back({item.id, predictions[i]});
        }
      }
      MetricValue presence = presence_metric(extracted, refs);
      state.presence_precision = presence.value.value_or(0.0);
    }

    if (!errors.empty()) {
      // Uniform subsample of min(k, |errors|) for curation.
      std::vector<std::size_t> picks = errors;
      for (std::size_t i = picks.size(); i > 1; --i) {
        std::uint64_t j = bounded_uniform(rng, i);
        std::swap(picks[i - 1], picks[j]);
      }
      picks.resize(std::min(cfg.error_budget, picks.size()));
      std::sort(picks.begin(), picks.end());
      for (std::size_t pos : picks) {
        const LilproItem& item = dataset[batch[pos]];
        state.curated.push_back(
            {item.id, item.text, item.reference, predictions[pos]});
      }
      std::string next = optimizer(prompt, state.curated);
      if (next.empty()) {
        raise(Errc::optimizer_failure, "optimizer returned an empty prompt");
      }
      prompt = std::move(next);
    }
    // empty error set: the prompt passes through unchanged

    result.trajectory.push_back(std::move(state));
  }

  if (cfg.selection == LilproConfig::Selection::argmax_mt) {
    std::size_t best = 0;
    for (std::size_t t = 1; t < result.trajectory.size(); ++t) {
      if (result.trajectory[t].batch_score >
          result.trajectory[best].batch_score) {
        best = t;
      }
    }
    result.final_prompt = result.trajectory[best].prompt;
  } else {
    result.final_prompt = prompt;  // p_T
  }
  return result;
}

std::string trajectory_jsonl(const std::vector<PromptState>& trajectory) {
  std::string out;
  for (const auto& state : trajectory) {
    out += state.to_json().dump();
    out.push_back('\n');
  }
  return out;
}

// ---------------------------------------------------------------------------

LilproRunResult run_lilpro_driver(const LilproRunRequest& req) {
  ExtractionSchema schema = req.cfg.load_schema();
  PricingTable pricing = req.cfg.pricing();
  pricing.lookup(req.cfg.provider_id, req.cfg.model_id);
  auto gateway = req.gateway ? req.gateway : build_gateway(req.cfg);
  std::shared_ptr<CacheStore> cache = req.cache;
  if (!cache && req.cfg.cache_enabled) {
    cache = open_cache(req.cfg.cache_backend, req.cfg.workspace / "cache");
  }
  auto ledger = std::make_shared<CostLedger>(req.cfg.budget);

  // Items: labeled chunks (id = chunk id, reference from the labels file).
  std::map<std::string, nlohmann::json> refs;
  for (const auto& label : req.labels.items) {
    if (label.field == req.field) refs[label.id] = label.value;
  }
  std::vector<LilproItem> items;
  for (const auto& chunk : load_and_chunk(req.cfg)) {
    auto it = refs.find(chunk.chunk_id);
    if (it != refs.end()) {
      items.push_back({chunk.chunk_id, chunk.text, it->second});
    }
  }
  if (items.empty()) {
    raise(Errc::dataset_too_small,
          "no chunks have a '" + req.field + "' reference label");
  }

  std::filesystem::path out_dir = req.out_dir;
  if (out_dir.empty()) {
    out_dir = req.cfg.workspace / "lilpro" /
              ("l" + req.cfg.identity_digest().substr(0, 12));
  }
  std::filesystem::create_directories(out_dir);

  auto write_driver_manifest = [&](const char* status) {
    nlohmann::json doc{{"kind", "lilpro"},
                       {"status", status},
                       {"field", req.field},
                       {"config_digest", req.cfg.identity_digest()},
                       {"schema_digest", schema.digest},
                       {"batch_size", req.lilpro.batch_size},
                       {"batches", req.lilpro.batches},
                       {"error_budget", req.lilpro.error_budget},
                       {"seed", req.lilpro.seed},
                       {"selection",
                        req.lilpro.selection ==
                                LilproConfig::Selection::argmax_mt
                            ? "argmax_mt"
                            : "final_pt"},
                       {"items", items.size()},
                       {"costs", ledger->snapshot()},
                       {"updated_at", now_iso8601_utc()}};
    write_file_atomic(out_dir / "manifest.json", doc.dump(2));
  };
  write_driver_manifest("running");  // manifest precedes any provider call

  // Extractor: the evolving prompt replaces the schema's prompt template.
  ExtractorFn extractor = [&](const std::string& prompt,
                              const LilproItem& item) -> nlohmann::json {
    ExtractionSchema working = schema;
    working.prompt_template = prompt;
    ProviderRequest preq;
    preq.provider_id = req.cfg.provider_id;
    preq.model_id = req.cfg.model_id;
    preq.system_prompt = working.system_prompt;
    preq.schema_digest = schema.digest;
    preq.params = req.cfg.params;
    try {
      preq.user_prompt = render_prompt(working, item.text);
    } catch (const Error&) {
      return nullptr;  // optimizer destroyed a placeholder; score it as an error
    }
    CallResult call;
    try {
      call = cached_call(preq, req.cfg.retry, *gateway, cache.get(), *ledger,
                         pricing, "extractor");
    } catch (const Error&) {
      return nullptr;
    }
    if (call.halted) {
      raise(Errc::config, "lilpro run exceeded its budget");
    }
    Coercion mode =
        req.cfg.lenient_coercion ? Coercion::lenient : Coercion::strict;
    ValidationOutcome validated =
        validate_output(working, call.body, item.id, mode);
    if (!validated.ok) return nullptr;
    for (const auto& rec : validated.records) {
      auto it = rec.values.find(req.field);
      if (it != rec.values.end()) return *it;
    }
    return nullptr;
  };

  OptimizerFn optimizer = [&](const std::string& prompt,
                              const std::vector<ErrorTriplet>& curated) {
    ProviderRequest preq;
    preq.provider_id = req.cfg.provider_id;
    preq.model_id = req.cfg.model_id;
    preq.user_prompt = build_meta_prompt(req.meta, prompt, curated);
    preq.schema_digest = schema.digest;
    preq.params = req.cfg.params;
    CallResult call = cached_call(preq, req.cfg.retry, *gateway, cache.get(),
                                  *ledger, pricing, "optimizer");
    if (call.halted) {
      raise(Errc::config, "lilpro run exceeded its budget");
    }
    return call.body;
  };

  LilproRunResult out;
  out.result = run_lilpro(items, extractor, optimizer, req.p0, req.lilpro);
  out.out_dir = out_dir;
  out.ledger = ledger->snapshot();
  write_file_atomic(out_dir / "trajectory.jsonl",
                    trajectory_jsonl(out.result.trajectory));
  write_file_atomic(out_dir / "final_prompt.txt", out.result.final_prompt);
  write_driver_manifest("complete");
  return out;
}

}  // namespace glean

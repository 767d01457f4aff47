#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "glean/cache.hpp"
#include "glean/config.hpp"
#include "glean/evaluation.hpp"
#include "glean/provider.hpp"

namespace glean {

struct ErrorTriplet {
  std::string id;
  std::string input;         // x
  nlohmann::json reference;  // y
  nlohmann::json prediction; // y-hat; null when extraction failed

  nlohmann::json to_json() const;
};

// One trajectory element: the prompt evaluated at batch t and what happened.
struct PromptState {
  std::size_t t = 0;
  std::string prompt;
  double batch_score = 0.0;  // m_t = mean per-item correctness over the batch
  std::size_t error_count = 0;
  std::vector<ErrorTriplet> curated;  // |curated| <= error budget
  double presence_precision = 0.0;    // presence metric over the same batch

  nlohmann::json to_json() const;
};

// Template with {examples} and {prompt}, each exactly once.
struct MetaPrompt {
  std::string template_text;

  static MetaPrompt load(std::string text);  // validates placeholders
  static MetaPrompt load_file(const std::filesystem::path& path);
};

struct LilproConfig {
  std::size_t batch_size = 8;    // B
  std::size_t batches = 20;      // T
  std::size_t error_budget = 3;  // k >= 1
  std::uint64_t seed = 0;
  enum class Selection { final_pt, argmax_mt };
  Selection selection = Selection::final_pt;
  double numeric_tolerance = 1e-9;  // phi tolerance for numeric fields
};

struct LilproItem {
  std::string id;
  std::string text;          // x
  nlohmann::json reference;  // y
};

// Extractor returns the predicted field value (null on failure); the
// optimizer proposes a refined prompt from curated error triplets.
using ExtractorFn =
    std::function<nlohmann::json(const std::string& prompt, const LilproItem&)>;
using OptimizerFn = std::function<std::string(
    const std::string& prompt, const std::vector<ErrorTriplet>&)>;

struct LilproResult {
  std::string final_prompt;
  std::vector<PromptState> trajectory;  // length T
};

// 1 iff exact match (booleans, strings/enums case-folded) or within the
// absolute tolerance for numbers. Null prediction scores 0. Mismatched
// value kinds raise Errc::type_mismatch.
int phi_exact(const nlohmann::json& reference, const nlohmann::json& prediction,
              double numeric_tolerance);

// {examples} becomes one deterministic block per triplet, {prompt} the
// current prompt. Single-pass substitution.
std::string build_meta_prompt(const MetaPrompt& meta, const std::string& prompt,
                              const std::vector<ErrorTriplet>& triplets);

// The optimization loop. Per batch t: sample B items without replacement
// (the pool spans batches and reshuffles when exhausted), score with
// phi-style correctness, curate min(k, |errors|) uniformly-sampled error
// triplets, and let the optimizer refine the prompt. An empty error set is
// a fixed point: the prompt passes through unchanged. The trajectory is a
// pure function of (dataset order, seed, extractor, optimizer).
LilproResult run_lilpro(const std::vector<LilproItem>& dataset,
                        const ExtractorFn& extractor,
                        const OptimizerFn& optimizer, const std::string& p0,
                        const LilproConfig& cfg);

std::string trajectory_jsonl(const std::vector<PromptState>& trajectory);

// ---------------------------------------------------------------------------
// Config-driven driver: items are the corpus chunks with references joined
// from a labels file; extractor and optimizer both go through the provider
// gateway, cache and ledger (the optimizer under its own role tag).

struct LilproRunRequest {
  RunConfig cfg;
  std::string field;
  std::string p0;  // initial prompt template (must keep {chunk_text})
  MetaPrompt meta;
  LilproConfig lilpro;
  LabeledDataset labels;  // references keyed by chunk id
  std::shared_ptr<Gateway> gateway;   // optional injection
  std::shared_ptr<CacheStore> cache;  // optional injection
  std::filesystem::path out_dir;      // empty -> <workspace>/lilpro/<id>
};

struct LilproRunResult {
  LilproResult result;
  nlohmann::json ledger;
  std::filesystem::path out_dir;  // trajectory.jsonl + manifest.json
};

LilproRunResult run_lilpro_driver(const LilproRunRequest& req);

}  // namespace glean

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "glean/cost.hpp"
#include "glean/ingest.hpp"
#include "glean/provider.hpp"
#include "glean/relevance.hpp"
#include "glean/schema.hpp"

namespace glean {

struct RelevanceConfig {
  std::vector<std::string> keywords;
  std::string mode = "exact_token";  // exact_token | substring | fuzzy
  double cutoff = 0.5;
  std::optional<double> fuzzy_threshold;

  bool enabled() const { return !keywords.empty(); }
  // fuzzy filtering passes chunks whose similarity reaches the threshold,
  // so the threshold doubles as the cutoff.
  double effective_cutoff() const {
    return mode == "fuzzy" && fuzzy_threshold ? *fuzzy_threshold : cutoff;
  }
  ChunkScorer make_scorer() const;
};

struct MockConfig {
  std::vector<MockRule> rules;
  std::optional<std::string> default_body;
  int fail_first = 0;
  std::string fail_class = "rate-limit";

  MockScript to_script() const;
};

// The complete, serializable description of a run. The identity digest
// covers every field that determines outputs (data, split, relevance,
// schema content, provider params, seed, mock script, pricing); budget and
// operational knobs (concurrency, batch size, retry timing, cache backend,
// workspace) stay outside it so a halted run can resume with a raised
// budget or different parallelism.
struct RunConfig {
  std::filesystem::path workspace = "workspace";
  std::uint64_t seed = 0;

  std::filesystem::path data_source;
  InputFormat format = InputFormat::txt;
  std::string text_column;

  SplitStrategy split_strategy = SplitStrategy::paragraph();
  RelevanceConfig relevance;

  std::filesystem::path schema_path;
  std::string schema_digest;  // content digest, filled at load

  std::string provider_id = "mock";
  std::string model_id;
  GenerationParams params;
  bool lenient_coercion = false;

  RetryPolicy retry;
  bool cache_enabled = true;
  std::string cache_backend = "sqlite";

  std::optional<Currency> budget;
  int batch_size = 16;
  int concurrency = 8;

  nlohmann::json pricing_json;  // inline table (normalized form)
  int cost_sample_size = 20;

  // Evaluation-side settings used by the experiment drivers; not part of
  // the identity digest (they never change extraction outputs).
  std::filesystem::path labels_path;
  std::string target_field;
  double train_fraction = 0.8;

  std::optional<MockConfig> mock;
  std::vector<nlohmann::json> http_profiles;  // HttpProviderProfile documents

  nlohmann::json to_json() const;  // normalized snapshot form
  static RunConfig from_json(const nlohmann::json& doc,
                             const std::filesystem::path& base_dir);
  static RunConfig load_file(const std::filesystem::path& path);

  nlohmann::json identity_json() const;
  std::string identity_digest() const;

  ExtractionSchema load_schema() const;
  PricingTable pricing() const { return PricingTable::from_json(pricing_json); }
};

}  // namespace glean

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace glean {

// Reference labels: JSON-lines {id, field, value}. For mention-level recall
// labels the same (id, field) may appear once per distinct mention value.
struct LabeledItem {
  std::string id;
  std::string field;
  nlohmann::json value;
};

struct LabeledDataset {
  std::vector<LabeledItem> items;
};

LabeledDataset load_labels(const std::filesystem::path& path);

struct Prediction {
  std::string id;
  nlohmann::json value;
};

// Undefined metrics stay undefined (value absent, reason attached) — they
// are never coerced to 0 or 1.
struct MetricValue {
  std::optional<double> value;
  std::string undefined_reason;
  std::int64_t support = 0;
};

struct ClassificationReport {
  MetricValue accuracy;
  MetricValue precision;
  MetricValue recall;
  MetricValue f1;
};

// Values compare by canonical form; strings are case-folded. Throws
// Errc::alignment when pred and ref id sets differ or an id repeats.
ClassificationReport classification_metrics(
    const std::vector<Prediction>& preds, const std::vector<Prediction>& refs,
    const nlohmann::json& positive_value);

struct RegressionReport {
  MetricValue mae;
  MetricValue r2;
};

RegressionReport regression_metrics(const std::vector<Prediction>& preds,
                                    const std::vector<Prediction>& refs);

// A source id is credited iff the correct value appears among its extracted
// records at least once; duplicates do not affect the score. `extracted`
// may hold 0..n rows per id, `refs` exactly one per id.
MetricValue presence_metric(const std::vector<Prediction>& extracted,
                            const std::vector<Prediction>& refs);

// refs enumerate all true mentions (distinct (id, value) pairs); a mention
// is recovered when its value appears among the records extracted for its
// source id. Matching is case-folded exact equality.
double recall_on_field(const std::vector<Prediction>& extracted,
                       const std::vector<Prediction>& mention_refs);

// Canonical comparison key used by all the metrics above.
std::string value_key(const nlohmann::json& value);

// Unbiased draw in [0, bound) by rejection; uniform_int_distribution is
// implementation-defined and would break cross-platform determinism.
std::uint64_t bounded_uniform(std::mt19937_64& rng, std::uint64_t bound);

// Unbiased seeded Fisher-Yates; identical output on every platform.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

// floor(n * train_fraction) indices to train; disjoint and exhaustive.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double train_fraction, std::uint64_t seed);

LabeledDataset select_items(const LabeledDataset& dataset,
                            const std::vector<std::size_t>& indices);

}  // namespace glean

#include "glean/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "glean/canonical.hpp"
#include "glean/errors.hpp"
#include "glean/fs.hpp"
#include "glean/text.hpp"

namespace glean {

LabeledDataset load_labels(const std::filesystem::path& path) {
  LabeledDataset dataset;
  for (const auto& row : read_jsonl(path)) {
    if (!row.is_object() || !row.contains("id") || !row.contains("field") ||
        !row.contains("value")) {
      raise(Errc::format,
            path.string() + ": label rows need {id, field, value}");
    }
    dataset.items.push_back({row["id"].get<std::string>(),
                             row["field"].get<std::string>(), row["value"]});
  }
  return dataset;
}

std::string value_key(const nlohmann::json& value) {
  if (value.is_string()) {
    return "s:" + ascii_fold(value.get_ref<const std::string&>());
  }
  if (value.is_boolean()) return value.get<bool>() ? "b:true" : "b:false";
  if (value.is_number_integer() || value.is_number_unsigned()) {
    return "n:" + canonical_number(value.get<double>());
  }
  if (value.is_number_float()) return "n:" + canonical_number(value.get<double>());
  if (value.is_null()) return "null";
  return "j:" + canonical_json(value);
}

namespace {

// id -> value map with duplicate and coverage checks.
std::map<std::string, const nlohmann::json*> align_unique(
    const std::vector<Prediction>& rows, const char* what) {
  std::map<std::string, const nlohmann::json*> out;
  for (const auto& row : rows) {
    if (!out.emplace(row.id, &row.value).second) {
      raise(Errc::alignment,
            std::string(what) + ": duplicate id '" + row.id + "'");
    }
  }
  return out;
}

std::vector<std::pair<const nlohmann::json*, const nlohmann::json*>>
aligned_pairs(const std::vector<Prediction>& preds,
              const std::vector<Prediction>& refs) {
  auto pred_map = align_unique(preds, "predictions");
  auto ref_map = align_unique(refs, "references");
  if (pred_map.size() != ref_map.size()) {
    raise(Errc::alignment, "prediction and reference id sets differ in size");
  }
  std::vector<std::pair<const nlohmann::json*, const nlohmann::json*>> pairs;
  pairs.reserve(ref_map.size());
  for (const auto& [id, ref] : ref_map) {
    auto it = pred_map.find(id);
    if (it == pred_map.end()) {
      raise(Errc::alignment, "missing prediction for id '" + id + "'");
    }
    pairs.emplace_back(it->second, ref);
  }
  return pairs;
}

MetricValue defined(double v, std::int64_t support) {
  return {v, "", support};
}

MetricValue undefined(std::string reason) {
  return {std::nullopt, std::move(reason), 0};
}

}  // namespace

ClassificationReport classification_metrics(
    const std::vector<Prediction>& preds, const std::vector<Prediction>& refs,
    const nlohmann::json& positive_value) {
  auto pairs = aligned_pairs(preds, refs);
  if (pairs.empty()) {
    ClassificationReport r;
    r.accuracy = r.precision = r.recall = r.f1 = undefined("no items");
    return r;
  }
  std::string positive = value_key(positive_value);
  std::int64_t tp = 0, fp = 0, fn = 0, correct = 0;
  for (const auto& [pred, ref] : pairs) {
    std::string p = value_key(*pred);
    std::string r = value_key(*ref);
    if (p == r) ++correct;
    if (p == positive && r == positive) ++tp;
    if (p == positive && r != positive) ++fp;
    if (p != positive && r == positive) ++fn;
  }
  auto n = static_cast<std::int64_t>(pairs.size());

  ClassificationReport report;
  report.accuracy =
      defined(static_cast<double>(correct) / static_cast<double>(n), n);
  report.precision =
      tp + fp == 0
          ? undefined("no positive predictions")
          : defined(static_cast<double>(tp) / static_cast<double>(tp + fp),
                    tp + fp);
  report.recall =
      tp + fn == 0
          ? undefined("no positive references")
          : defined(static_cast<double>(tp) / static_cast<double>(tp + fn),
                    tp + fn);
  if (!report.precision.value || !report.recall.value) {
    report.f1 = undefined(!report.precision.value
                              ? report.precision.undefined_reason
                              : report.recall.undefined_reason);
  } else {
    double p = *report.precision.value;
    double r = *report.recall.value;
    report.f1 = defined(p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r),
                        tp + fp + fn);
  }
  return report;
}

RegressionReport regression_metrics(const std::vector<Prediction>& preds,
                                    const std::vector<Prediction>& refs) {
  auto pairs = aligned_pairs(preds, refs);
  RegressionReport report;
  if (pairs.empty()) {
    report.mae = report.r2 = undefined("no items");
    return report;
  }
  std::vector<double> p, r;
  for (const auto& [pred, ref] : pairs) {
    if (!pred->is_number() || !ref->is_number()) {
      raise(Errc::alignment, "regression metrics need numeric values");
    }
    p.push_back(pred->get<double>());
    r.push_back(ref->get<double>());
  }
  auto n = static_cast<std::int64_t>(p.size());

  double abs_sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) abs_sum += std::abs(p[i] - r[i]);
  report.mae = defined(abs_sum / static_cast<double>(n), n);

  if (n < 2) {
    report.r2 = undefined("r2 needs at least 2 items");
    return report;
  }
  double mean = 0.0;
  for (double v : r) mean += v;
  mean /= static_cast<double>(n);
  double ss_tot = 0.0, ss_res = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    ss_tot += (r[i] - mean) * (r[i] - mean);
    ss_res += (p[i] - r[i]) * (p[i] - r[i]);
  }
  if (ss_tot == 0.0) {
    report.r2 = undefined("degenerate variance: references are constant");
  } else {
    report.r2 = defined(1.0 - ss_res / ss_tot, n);
  }
  return report;
}

MetricValue presence_metric(const std::vector<Prediction>& extracted,
                            const std::vector<Prediction>& refs) {
  auto ref_map = align_unique(refs, "references");
  if (ref_map.empty()) return undefined("no references");

  std::map<std::string, std::set<std::string>> seen;
  for (const auto& row : extracted) {
    seen[row.id].insert(value_key(row.value));
  }
  std::int64_t credited = 0;
  for (const auto& [id, ref] : ref_map) {
    auto it = seen.find(id);
    if (it != seen.end() && it->second.count(value_key(*ref)) != 0) {
      ++credited;
    }
  }
  auto evaluated = static_cast<std::int64_t>(ref_map.size());
  return defined(static_cast<double>(credited) / static_cast<double>(evaluated),
                 evaluated);
}

double recall_on_field(const std::vector<Prediction>& extracted,
                       const std::vector<Prediction>& mention_refs) {
  std::set<std::pair<std::string, std::string>> mentions;
  for (const auto& ref : mention_refs) {
    mentions.emplace(ref.id, value_key(ref.value));
  }
  if (mentions.empty()) {
    raise(Errc::alignment, "recall needs at least one reference mention");
  }
  std::map<std::string, std::set<std::string>> seen;
  for (const auto& row : extracted) {
    seen[row.id].insert(value_key(row.value));
  }
  std::size_t recovered = 0;
  for (const auto& [id, key] : mentions) {
    auto it = seen.find(id);
    if (it != seen.end() && it->second.count(key) != 0) ++recovered;
  }
  return static_cast<double>(recovered) / static_cast<double>(mentions.size());
}

std::uint64_t bounded_uniform(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t span = (UINT64_MAX / bound) * bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= span);
  return x % bound;
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    std::uint64_t j = bounded_uniform(rng, i);
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double train_fraction, std::uint64_t seed) {
  if (train_fraction <= 0.0 || train_fraction >= 1.0) {
    raise(Errc::config, "train_fraction must lie in (0,1)");
  }
  auto perm = seeded_permutation(n, seed);
  auto train_size = static_cast<std::size_t>(
      std::floor(static_cast<double>(n) * train_fraction));
  std::vector<std::size_t> train(perm.begin(),
                                 perm.begin() + static_cast<std::ptrdiff_t>(train_size));
  std::vector<std::size_t> test(perm.begin() + static_cast<std::ptrdiff_t>(train_size),
                                perm.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {std::move(train), std::move(test)};
}

LabeledDataset select_items(const LabeledDataset& dataset,
                            const std::vector<std::size_t>& indices) {
  LabeledDataset out;
  out.items.reserve(indices.size());
  for (std::size_t i : indices) out.items.push_back(dataset.items.at(i));
  return out;
}

}  // namespace glean

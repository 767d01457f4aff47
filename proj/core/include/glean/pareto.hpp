#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "glean/cache.hpp"
#include "glean/config.hpp"
#include "glean/cost.hpp"
#include "glean/evaluation.hpp"
#include "glean/executor.hpp"

namespace glean {

struct ParetoPoint {
  std::size_t k = 0;
  std::vector<std::string> keywords;  // nested: row k extends row k-1
  double recall_train = 0.0;
  double recall_test = 0.0;
  Currency cost_train;
  Currency cost_test;
  double norm_cost_train = 0.0;
  double norm_cost_test = 0.0;
};

struct QuadraticFit {
  double a = 0.0;  // constrained a <= 0
  double b = 0.0;
  double c = 0.0;
  bool constraint_active = false;
};

// Greedy forward selection: at step k, add the candidate that maximizes
// eval_fn over (picked + candidate), holding prior picks fixed. Ties break
// lexicographically. Returns all max_k nested sets.
std::vector<std::vector<std::string>> greedy_select(
    const std::vector<std::string>& candidates, std::size_t max_k,
    const std::function<double(const std::vector<std::string>&)>& eval_fn);

// Divide by the within-split maximum; results in [0,1] with >=1 value equal
// to 1. Errc::all_zero_costs when there is nothing to normalize by.
std::vector<double> normalize_costs(const std::vector<Currency>& costs);

// Least-squares a*x^2 + b*x + c. When the unconstrained quadratic term is
// positive, refits with a = 0 (the exact KKT solution for the single sign
// constraint) and marks constraint_active.
QuadraticFit fit_constrained_quadratic(
    const std::vector<std::pair<double, double>>& points);

struct SweepRequest {
  RunConfig cfg;
  std::vector<std::string> candidates;
  std::size_t max_k = 0;  // 0 -> all candidates
  std::string field;      // recall target, e.g. "good"
  LabeledDataset labels;  // mention refs keyed by doc id
  double train_fraction = 0.8;
  std::shared_ptr<Gateway> gateway;   // optional injection
  std::shared_ptr<CacheStore> cache;  // optional injection
};

struct SweepOutcome {
  std::vector<ParetoPoint> points;
  QuadraticFit fit_train;
  QuadraticFit fit_test;
  nlohmann::json ledger;
  std::vector<std::string> train_docs;
  std::vector<std::string> test_docs;

  nlohmann::json to_json() const;
};

// Docs split train/test by seeded shuffle; greedy selection maximizes train
// recall; each nested set is then evaluated on both splits for recall and
// projected gross cost (sampled per cost_sample_size, scaled to the split
// population, cache effects excluded). Costs normalize independently per
// split. Nesting makes the cache pay for itself: step k+1 only pays for
// newly kept chunks.
SweepOutcome run_sweep(const SweepRequest& req);

// CSV with one row per (k, split): k,split,keywords,recall,cost,norm_cost,
// fit_a,fit_b,fit_c.
std::string frontier_csv(const SweepOutcome& outcome);

}  // namespace glean

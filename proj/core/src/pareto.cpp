#include "glean/pareto.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "glean/canonical.hpp"
#include "glean/errors.hpp"

namespace glean {

std::vector<std::vector<std::string>> greedy_select(
    const std::vector<std::string>& candidates, std::size_t max_k,
    const std::function<double(const std::vector<std::string>&)>& eval_fn) {
  if (candidates.empty()) {
    raise(Errc::config, "greedy selection needs at least one candidate");
  }
  if (max_k == 0 || max_k > candidates.size()) {
    raise(Errc::config, "max_k must lie in [1, |candidates|]");
  }
  std::vector<std::string> pool(candidates);
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());

  std::vector<std::vector<std::string>> nested;
  std::vector<std::string> picked;
  for (std::size_t k = 0; k < max_k; ++k) {
    std::string best;
    double best_recall = -1.0;
    for (const auto& candidate : pool) {  // lexicographic order breaks ties
      if (std::find(picked.begin(), picked.end(), candidate) != picked.end()) {
        continue;
      }
      std::vector<std::string> trial = picked;
      trial.push_back(candidate);
      double recall = eval_fn(trial);
      if (recall > best_recall) {
        best_recall = recall;
        best = candidate;
      }
    }
    picked.push_back(best);
    nested.push_back(picked);
  }
  return nested;
}

std::vector<double> normalize_costs(const std::vector<Currency>& costs) {
  Currency max_cost;
  for (const auto& c : costs) max_cost = std::max(max_cost, c);
  if (max_cost.micros <= 0) {
    raise(Errc::all_zero_costs, "cannot normalize: all costs are zero");
  }
  std::vector<double> out;
  out.reserve(costs.size());
  for (const auto& c : costs) {
    out.push_back(static_cast<double>(c.micros) /
                  static_cast<double>(max_cost.micros));
  }
  return out;
}

namespace {

// 3x3 linear solve with partial pivoting, long double accumulation.
bool solve3(long double m[3][4]) {
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 3; ++r) {
      if (std::fabs((double)m[r][col]) > std::fabs((double)m[pivot][col])) {
        pivot = r;
      }
    }
    if (std::fabs((double)m[pivot][col]) < 1e-30) return false;
    std::swap(m[pivot], m[col]);
    for (int r = 0; r < 3; ++r) {
      if (r == col) continue;
      long double f = m[r][col] / m[col][col];
      for (int c = col; c < 4; ++c) m[r][c] -= f * m[col][c];
    }
  }
  return true;
}

std::pair<double, double> linear_fit(
    const std::vector<std::pair<double, double>>& points) {
  long double sx = 0, sy = 0, sxx = 0, sxy = 0;
  auto n = static_cast<long double>(points.size());
  for (const auto& [x, y] : points) {
    sx += x;
    sy += y;
    sxx += static_cast<long double>(x) * x;
    sxy += static_cast<long double>(x) * y;
  }
  long double var = n * sxx - sx * sx;
  if (std::fabs((double)var) < 1e-30) {
    raise(Errc::degenerate_points, "all x values coincide");
  }
  long double b = (n * sxy - sx * sy) / var;
  long double c = (sy - b * sx) / n;
  return {static_cast<double>(b), static_cast<double>(c)};
}

}  // namespace

QuadraticFit fit_constrained_quadratic(
    const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) {
    raise(Errc::degenerate_points, "quadratic fit needs >= 3 points");
  }
  std::set<double> distinct_x;
  for (const auto& [x, y] : points) distinct_x.insert(x);
  if (distinct_x.size() < 2) {
    raise(Errc::degenerate_points, "all x values coincide");
  }

  QuadraticFit fit;
  if (distinct_x.size() == 2) {
    // Quadratic is underdetermined; the line through the means is the
    // minimum-norm answer and trivially satisfies a <= 0.
    auto [b, c] = linear_fit(points);
    fit.b = b;
    fit.c = c;
    return fit;
  }

  long double s1 = static_cast<long double>(points.size());
  long double sx = 0, sx2 = 0, sx3 = 0, sx4 = 0, sy = 0, sxy = 0, sx2y = 0;
  for (const auto& [x, y] : points) {
    long double lx = x, ly = y;
    sx += lx;
    sx2 += lx * lx;
    sx3 += lx * lx * lx;
    sx4 += lx * lx * lx * lx;
    sy += ly;
    sxy += lx * ly;
    sx2y += lx * lx * ly;
  }
  long double m[3][4] = {{sx4, sx3, sx2, sx2y},
                         {sx3, sx2, sx, sxy},
                         {sx2, sx, s1, sy}};
  if (!solve3(m)) {
    auto [b, c] = linear_fit(points);
    fit.b = b;
    fit.c = c;
    return fit;
  }
  fit.a = static_cast<double>(m[0][3]);
  fit.b = static_cast<double>(m[1][3]);
  fit.c = static_cast<double>(m[2][3]);
  if (fit.a > 0.0) {
    auto [b, c] = linear_fit(points);
    fit = QuadraticFit{0.0, b, c, true};
  }
  return fit;
}

// ---------------------------------------------------------------------------

namespace {

struct SplitEval {
  double recall = 0.0;
  Currency gross_cost;
  std::size_t kept = 0;
};

struct SweepSession {
  const SweepRequest& req;
  ExtractionSchema schema;
  PricingTable pricing;
  std::shared_ptr<Gateway> gateway;
  std::shared_ptr<CacheStore> cache;
  CostLedger ledger;
};

SplitEval evaluate_keywords(SweepSession& s,
                            const std::vector<std::string>& keywords,
                            const std::vector<Chunk>& chunks,
                            const std::vector<Prediction>& mention_refs,
                            std::uint64_t sample_seed) {
  KeywordSet ks;
  ks.keywords = keywords;
  std::sort(ks.keywords.begin(), ks.keywords.end());
  ks.match_mode = s.req.cfg.relevance.mode == "substring"
                      ? MatchMode::substring
                      : MatchMode::exact_token;

  FilterResult filtered = filter_chunks(chunks, keyword_scorer(ks), 0.5);
  SplitEval eval;
  eval.kept = filtered.kept.size();
  if (filtered.kept.empty()) {
    return eval;  // recall 0, cost 0
  }

  std::vector<Prediction> extracted;
  std::vector<Currency> per_chunk_cost;
  per_chunk_cost.reserve(filtered.kept.size());
  for (const auto& chunk : filtered.kept) {
    ChunkOutcome outcome =
        process_chunk(chunk, s.schema, s.req.cfg, *s.gateway, s.cache.get(),
                      s.ledger, s.pricing, "pareto");
    for (const auto& rec : outcome.records) {
      auto it = rec.values.find(s.req.field);
      if (it != rec.values.end()) {
        extracted.push_back({chunk.doc_id, *it});
      }
    }
    // Gross (cache-free) cost: what a cold-start user would pay per call.
    per_chunk_cost.push_back(call_cost(outcome.audit.usage, s.pricing,
                                       s.req.cfg.provider_id,
                                       s.req.cfg.model_id));
  }

  eval.recall = recall_on_field(extracted, mention_refs);

  auto sample_size = static_cast<std::size_t>(
      std::max(1, s.req.cfg.cost_sample_size));
  if (sample_size >= per_chunk_cost.size()) {
    for (const auto& c : per_chunk_cost) eval.gross_cost += c;
  } else {
    auto perm = seeded_permutation(per_chunk_cost.size(), sample_seed);
    Currency sample_cost;
    for (std::size_t i = 0; i < sample_size; ++i) {
      sample_cost += per_chunk_cost[perm[i]];
    }
    eval.gross_cost = scale_to_population(
        sample_cost, static_cast<std::int64_t>(sample_size),
        static_cast<std::int64_t>(per_chunk_cost.size()));
  }
  return eval;
}

std::vector<Prediction> labels_for_docs(const LabeledDataset& labels,
                                        const std::string& field,
                                        const std::set<std::string>& docs) {
  std::vector<Prediction> refs;
  for (const auto& item : labels.items) {
    if (item.field == field && docs.count(item.id) != 0) {
      refs.push_back({item.id, item.value});
    }
  }
  return refs;
}

}  // namespace

nlohmann::json SweepOutcome::to_json() const {
  nlohmann::json points_json = nlohmann::json::array();
  for (const auto& p : points) {
    points_json.push_back({{"k", p.k},
                           {"keywords", p.keywords},
                           {"recall_train", p.recall_train},
                           {"recall_test", p.recall_test},
                           {"cost_train", p.cost_train.str()},
                           {"cost_test", p.cost_test.str()},
                           {"norm_cost_train", p.norm_cost_train},
                           {"norm_cost_test", p.norm_cost_test}});
  }
  auto fit_json = [](const QuadraticFit& f) {
    return nlohmann::json{{"a", f.a},
                          {"b", f.b},
                          {"c", f.c},
                          {"constraint_active", f.constraint_active}};
  };
  return nlohmann::json{{"points", std::move(points_json)},
                        {"fit_train", fit_json(fit_train)},
                        {"fit_test", fit_json(fit_test)},
                        {"ledger", ledger},
                        {"train_docs", train_docs},
                        {"test_docs", test_docs}};
}

SweepOutcome run_sweep(const SweepRequest& req) {
  if (req.field.empty()) {
    raise(Errc::config, "sweep needs a target field");
  }
  SweepSession session{req,
                       req.cfg.load_schema(),
                       req.cfg.pricing(),
                       req.gateway ? req.gateway : build_gateway(req.cfg),
                       req.cache,
                       CostLedger{}};
  if (!session.cache && req.cfg.cache_enabled) {
    session.cache = open_cache(req.cfg.cache_backend,
                               req.cfg.workspace / "cache");
  }
  session.pricing.lookup(req.cfg.provider_id, req.cfg.model_id);

  std::vector<Chunk> chunks = load_and_chunk(req.cfg);
  std::set<std::string> doc_ids;
  for (const auto& c : chunks) doc_ids.insert(c.doc_id);
  std::vector<std::string> docs(doc_ids.begin(), doc_ids.end());
  if (docs.size() < 2) {
    raise(Errc::config, "sweep needs at least 2 documents to split");
  }

  auto [train_idx, test_idx] =
      split_indices(docs.size(), req.train_fraction, req.cfg.seed);
  std::set<std::string> train_docs, test_docs;
  for (auto i : train_idx) train_docs.insert(docs[i]);
  for (auto i : test_idx) test_docs.insert(docs[i]);

  std::vector<Chunk> train_chunks, test_chunks;
  for (const auto& c : chunks) {
    (train_docs.count(c.doc_id) != 0 ? train_chunks : test_chunks).push_back(c);
  }
  auto train_refs = labels_for_docs(req.labels, req.field, train_docs);
  auto test_refs = labels_for_docs(req.labels, req.field, test_docs);
  if (train_refs.empty() || test_refs.empty()) {
    raise(Errc::alignment,
          "sweep needs reference mentions in both train and test splits");
  }

  std::size_t max_k = req.max_k == 0 ? req.candidates.size() : req.max_k;
  auto nested = greedy_select(
      req.candidates, max_k, [&](const std::vector<std::string>& keywords) {
        return evaluate_keywords(session, keywords, train_chunks, train_refs,
                                 req.cfg.seed)
            .recall;
      });

  SweepOutcome outcome;
  outcome.train_docs.assign(train_docs.begin(), train_docs.end());
  outcome.test_docs.assign(test_docs.begin(), test_docs.end());

  std::vector<Currency> train_costs, test_costs;
  for (std::size_t k = 0; k < nested.size(); ++k) {
    std::uint64_t salt = req.cfg.seed * 1000003ULL + k;
    SplitEval train_eval = evaluate_keywords(session, nested[k], train_chunks,
                                             train_refs, salt * 2);
    SplitEval test_eval = evaluate_keywords(session, nested[k], test_chunks,
                                            test_refs, salt * 2 + 1);
    ParetoPoint point;
    point.k = k + 1;
    point.keywords = nested[k];
    point.recall_train = train_eval.recall;
    point.recall_test = test_eval.recall;
    point.cost_train = train_eval.gross_cost;
    point.cost_test = test_eval.gross_cost;
    outcome.points.push_back(std::move(point));
    train_costs.push_back(train_eval.gross_cost);
    test_costs.push_back(test_eval.gross_cost);
  }

  auto norm_train = normalize_costs(train_costs);
  auto norm_test = normalize_costs(test_costs);
  std::vector<std::pair<double, double>> train_pts, test_pts;
  for (std::size_t k = 0; k < outcome.points.size(); ++k) {
    outcome.points[k].norm_cost_train = norm_train[k];
    outcome.points[k].norm_cost_test = norm_test[k];
    train_pts.emplace_back(norm_train[k], outcome.points[k].recall_train);
    test_pts.emplace_back(norm_test[k], outcome.points[k].recall_test);
  }
  outcome.fit_train = fit_constrained_quadratic(train_pts);
  outcome.fit_test = fit_constrained_quadratic(test_pts);
  outcome.ledger = session.ledger.snapshot();
  return outcome;
}

std::string frontier_csv(const SweepOutcome& outcome) {
  std::string csv = "k,split,keywords,recall,norm_cost,fit_a,fit_b,fit_c\n";
  auto row = [&](std::size_t k, const char* split,
                 const std::vector<std::string>& keywords, double recall,
                 double norm_cost, const QuadraticFit& fit) {
    std::string kws;
    for (const auto& kw : keywords) {
      if (!kws.empty()) kws += " ";
      kws += kw;
    }
    csv += std::to_string(k) + "," + split + "," + kws + "," +
           canonical_number(recall) + "," + canonical_number(norm_cost) + "," +
           canonical_number(fit.a) + "," + canonical_number(fit.b) + "," +
           canonical_number(fit.c) + "\n";
  };
  for (const auto& p : outcome.points) {
    row(p.k, "train", p.keywords, p.recall_train, p.norm_cost_train,
        outcome.fit_train);
  }
  for (const auto& p : outcome.points) {
    row(p.k, "test", p.keywords, p.recall_test, p.norm_cost_test,
        outcome.fit_test);
  }
  return csv;
}

}  // namespace glean

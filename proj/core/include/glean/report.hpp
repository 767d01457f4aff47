#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "glean/evaluation.hpp"
#include "glean/lilpro.hpp"
#include "glean/pareto.hpp"

namespace glean {

struct MetricReport {
  std::string metric;
  std::string field;
  MetricValue value;

  nlohmann::json to_json() const;
};

nlohmann::json reports_to_json(const std::vector<MetricReport>& reports);
std::string reports_to_table(const std::vector<MetricReport>& reports);

// trajectory CSV: t,m_t,presence_precision,error_count
std::string trajectory_csv(const std::vector<PromptState>& trajectory);

// Minimal standalone SVG emitters for the two built-in figures.
// Frontier: normalized cost on x, recall on y, one series per split with
// its constrained quadratic fit. Trajectory: batch index on x, score on y.
std::string frontier_svg(const SweepOutcome& outcome);
std::string trajectory_svg(const std::vector<PromptState>& trajectory);

}  // namespace glean

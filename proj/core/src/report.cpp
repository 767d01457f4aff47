#include "glean/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "glean/canonical.hpp"

namespace glean {

nlohmann::json MetricReport::to_json() const {
  nlohmann::json doc{{"metric", metric}, {"support", value.support}};
  if (!field.empty()) doc["field"] = field;
  if (value.value) {
    doc["value"] = *value.value;
  } else {
    doc["value"] = nullptr;
    doc["undefined_reason"] = value.undefined_reason;
  }
  return doc;
}

nlohmann::json reports_to_json(const std::vector<MetricReport>& reports) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : reports) arr.push_back(r.to_json());
  return arr;
}

std::string reports_to_table(const std::vector<MetricReport>& reports) {
  std::size_t name_width = 8;
  for (const auto& r : reports) {
    std::string label = r.field.empty() ? r.metric : r.field + "." + r.metric;
    name_width = std::max(name_width, label.size());
  }
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%-*s  %10s  %8s\n",
                static_cast<int>(name_width), "metric", "value", "support");
  out += line;
  for (const auto& r : reports) {
    std::string label = r.field.empty() ? r.metric : r.field + "." + r.metric;
    if (r.value.value) {
      std::snprintf(line, sizeof line, "%-*s  %10.6f  %8lld\n",
                    static_cast<int>(name_width), label.c_str(),
                    *r.value.value, static_cast<long long>(r.value.support));
    } else {
      std::snprintf(line, sizeof line, "%-*s  %10s  %8s  (%s)\n",
                    static_cast<int>(name_width), label.c_str(), "undefined",
                    "-", r.value.undefined_reason.c_str());
    }
    out += line;
  }
  return out;
}

std::string trajectory_csv(const std::vector<PromptState>& trajectory) {
  std::string csv = "t,m_t,presence_precision,error_count\n";
  for (const auto& s : trajectory) {
    csv += std::to_string(s.t) + "," + canonical_number(s.batch_score) + "," +
           canonical_number(s.presence_precision) + "," +
           std::to_string(s.error_count) + "\n";
  }
  return csv;
}

namespace {

// Plot geometry shared by both figures.
constexpr double kWidth = 640, kHeight = 480;
constexpr double kLeft = 70, kRight = 20, kTop = 30, kBottom = 55;

double sx(double x, double x0, double x1) {
  if (x1 == x0) return kLeft;
  return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight);
}

double sy(double y, double y0, double y1) {
  if (y1 == y0) return kHeight - kBottom;
  return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

void svg_header(std::string& out, const std::string& x_label,
                const std::string& y_label, double x0, double x1, double y0,
                double y1) {
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string((int)kWidth) + "\" height=\"" +
         std::to_string((int)kHeight) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  // axes
  out += "<line x1=\"" + fmt(kLeft) + "\" y1=\"" + fmt(kHeight - kBottom) +
         "\" x2=\"" + fmt(kWidth - kRight) + "\" y2=\"" +
         fmt(kHeight - kBottom) + "\" stroke=\"black\"/>\n";
  out += "<line x1=\"" + fmt(kLeft) + "\" y1=\"" + fmt(kTop) + "\" x2=\"" +
         fmt(kLeft) + "\" y2=\"" + fmt(kHeight - kBottom) +
         "\" stroke=\"black\"/>\n";
  // ticks at the extremes
  for (double t : {0.0, 0.5, 1.0}) {
    double xv = x0 + t * (x1 - x0);
    double yv = y0 + t * (y1 - y0);
    out += "<text x=\"" + fmt(sx(xv, x0, x1)) + "\" y=\"" +
           fmt(kHeight - kBottom + 18) +
           "\" font-size=\"11\" text-anchor=\"middle\">" + fmt(xv) +
           "</text>\n";
    out += "<text x=\"" + fmt(kLeft - 8) + "\" y=\"" +
           fmt(sy(yv, y0, y1) + 4) +
           "\" font-size=\"11\" text-anchor=\"end\">" + fmt(yv) + "</text>\n";
  }
  out += "<text x=\"" + fmt((kLeft + kWidth - kRight) / 2) + "\" y=\"" +
         fmt(kHeight - 12) + "\" font-size=\"13\" text-anchor=\"middle\">" +
         x_label + "</text>\n";
  out += "<text x=\"16\" y=\"" + fmt((kTop + kHeight - kBottom) / 2) +
         "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 "
         "16 " +
         fmt((kTop + kHeight - kBottom) / 2) + ")\">" + y_label + "</text>\n";
}

void svg_series(std::string& out,
                const std::vector<std::pair<double, double>>& pts,
                const QuadraticFit* fit, const std::string& color, double x0,
                double x1, double y0, double y1) {
  for (const auto& [x, y] : pts) {
    out += "<circle cx=\"" + fmt(sx(x, x0, x1)) + "\" cy=\"" +
           fmt(sy(y, y0, y1)) + "\" r=\"4\" fill=\"" + color + "\"/>\n";
  }
  if (fit != nullptr) {
    out += "<polyline fill=\"none\" stroke=\"" + color +
           "\" stroke-width=\"1.5\" points=\"";
    for (int i = 0; i <= 100; ++i) {
      double x = x0 + (x1 - x0) * i / 100.0;
      double y = fit->a * x * x + fit->b * x + fit->c;
      double cy = std::clamp(sy(y, y0, y1), kTop, kHeight - kBottom);
      out += fmt(sx(x, x0, x1)) + "," + fmt(cy) + " ";
    }
    out += "\"/>\n";
  }
}

}  // namespace

std::string frontier_svg(const SweepOutcome& outcome) {
  std::vector<std::pair<double, double>> train_pts, test_pts;
  for (const auto& p : outcome.points) {
    train_pts.emplace_back(p.norm_cost_train, p.recall_train);
    test_pts.emplace_back(p.norm_cost_test, p.recall_test);
  }
  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
  std::string out;
  svg_header(out, "Normalized cost", "Recall", x0, x1, y0, y1);
  svg_series(out, train_pts, &outcome.fit_train, "#1f77b4", x0, x1, y0, y1);
  svg_series(out, test_pts, &outcome.fit_test, "#d62728", x0, x1, y0, y1);
  out += "<text x=\"" + fmt(kWidth - 150) + "\" y=\"" + fmt(kTop + 10) +
         "\" font-size=\"12\" fill=\"#1f77b4\">train</text>\n";
  out += "<text x=\"" + fmt(kWidth - 150) + "\" y=\"" + fmt(kTop + 26) +
         "\" font-size=\"12\" fill=\"#d62728\">test</text>\n";
  out += "</svg>\n";
  return out;
}

std::string trajectory_svg(const std::vector<PromptState>& trajectory) {
  std::vector<std::pair<double, double>> score_pts, presence_pts;
  for (const auto& s : trajectory) {
    score_pts.emplace_back(static_cast<double>(s.t), s.batch_score);
    presence_pts.emplace_back(static_cast<double>(s.t), s.presence_precision);
  }
  double x1 = trajectory.empty()
                  ? 1.0
                  : static_cast<double>(trajectory.back().t);
  if (x1 <= 0.0) x1 = 1.0;
  std::string out;
  svg_header(out, "Batch index", "Precision", 0.0, x1, 0.0, 1.0);
  svg_series(out, presence_pts, nullptr, "#1f77b4", 0.0, x1, 0.0, 1.0);
  svg_series(out, score_pts, nullptr, "#2ca02c", 0.0, x1, 0.0, 1.0);
  // connect presence points
  out += "<polyline fill=\"none\" stroke=\"#1f77b4\" points=\"";
  for (const auto& [x, y] : presence_pts) {
    out += fmt(sx(x, 0.0, x1)) + "," + fmt(sy(y, 0.0, 1.0)) + " ";
  }
  out += "\"/>\n";
  out += "<text x=\"" + fmt(kWidth - 220) + "\" y=\"" + fmt(kTop + 10) +
         "\" font-size=\"12\" fill=\"#1f77b4\">presence precision</text>\n";
  out += "<text x=\"" + fmt(kWidth - 220) + "\" y=\"" + fmt(kTop + 26) +
         "\" font-size=\"12\" fill=\"#2ca02c\">batch score</text>\n";
  out += "</svg>\n";
  return out;
}

}  // namespace glean

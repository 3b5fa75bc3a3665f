#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dti/error.hpp"
#include "dti/io.hpp"
#include "dti/kpi.hpp"
#include "dti/readiness.hpp"

namespace dti {

/// Drawable width, in px, of a 100% bar.
inline constexpr double kChartWidth = 400.0;

namespace report_detail {

inline std::string escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

inline std::string bar_length(double pct) { return number_text(round_half_up(pct * kChartWidth / 100.0, 2)); }

struct Bar {
  std::string label;
  double pct;
  std::string value_text;  // printed next to the bar
};

inline std::string bar_chart(const std::string& title, const std::vector<Bar>& bars) {
  constexpr int label_w = 300, row_h = 26, bar_h = 18, pad = 8;
  const int height = static_cast<int>(bars.size()) * row_h + 2 * pad;
  const int width = label_w + static_cast<int>(kChartWidth) + 120;
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" class=\"chart\" role=\"img\" width=\"" +
                  std::to_string(width) + "\" height=\"" + std::to_string(height) + "\" aria-label=\"" +
                  escape(title) + "\">\n";
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const int y = pad + static_cast<int>(i) * row_h;
    s += "  <text x=\"" + std::to_string(label_w - 6) + "\" y=\"" + std::to_string(y + 13) +
         "\" text-anchor=\"end\">" + escape(bars[i].label) + "</text>\n";
    s += "  <rect x=\"" + std::to_string(label_w) + "\" y=\"" + std::to_string(y) + "\" width=\"" +
         number_text(kChartWidth) + "\" height=\"" + std::to_string(bar_h) + "\" class=\"track\"/>\n";
    s += "  <rect x=\"" + std::to_string(label_w) + "\" y=\"" + std::to_string(y) + "\" width=\"" +
         bar_length(bars[i].pct) + "\" height=\"" + std::to_string(bar_h) + "\" class=\"bar\" data-pct=\"" +
         number_text(bars[i].pct) + "\"/>\n";
    s += "  <text x=\"" + std::to_string(label_w + static_cast<int>(kChartWidth) + 6) + "\" y=\"" +
         std::to_string(y + 13) + "\">" + escape(bars[i].value_text) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

inline constexpr std::string_view kStyle = R"(body{font-family:sans-serif;margin:2em;color:#1d2733;max-width:1100px}
h1{font-size:1.6em}h2{border-bottom:1px solid #c9d3de;padding-bottom:.2em;margin-top:2em}
table{border-collapse:collapse;margin:.8em 0;font-size:.9em}th,td{border:1px solid #d5dde6;padding:.25em .6em}
td.num{text-align:right;font-variant-numeric:tabular-nums}th{background:#eef2f6}
svg.chart text{font-size:12px;fill:#1d2733}svg.chart rect.track{fill:#eef2f6}svg.chart rect.bar{fill:#2f6fab}
p.note{color:#56657a;font-size:.9em})";

}  // namespace report_detail

/// Self-contained HTML (inline SVG, no scripts, no external assets). `dti_table` is the
/// exported index JSON; every figure is printed with the serializer's own number text.
inline std::string render_report_html(const std::vector<KpiRecord>& kpis, const Json& dti_table,
                                      const std::optional<ReadinessReport>& readiness) {
  using report_detail::escape;
  std::string h;
  h += "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n";
  h += "<title>Digital Transformation Index report</title>\n<style>\n";
  h += report_detail::kStyle;
  h += "\n</style>\n</head>\n<body>\n<h1>Digital Transformation Index report</h1>\n";

  // Summary
  const Json& summary = dti_table.at("summary");
  h += "<h2>Summary</h2>\n<table class=\"summary\">\n";
  h += "<tr><th>Organizations</th><td class=\"num\">" + summary.at("count").dump() + "</td></tr>\n";
  h += "<tr><th>Mean DTI</th><td class=\"num\">" + summary.at("mean_dti").dump() + "</td></tr>\n";
  for (const auto& [dim, v] : summary.at("dimension_means").items())
    h += "<tr><th>Mean " + escape(dim) + "</th><td class=\"num\">" + v.dump() + "</td></tr>\n";
  h += "</table>\n";

  // KPIs, one chart per group in first-seen order
  h += "<h2>Key performance indicators</h2>\n";
  if (kpis.empty()) {
    h += "<p class=\"empty\">No KPIs configured.</p>\n";
  } else {
    std::vector<std::string> groups;
    for (const auto& k : kpis)
      if (std::find(groups.begin(), groups.end(), k.group) == groups.end()) groups.push_back(k.group);
    for (const auto& g : groups) {
      h += "<h3>" + escape(g) + "</h3>\n";
      std::vector<report_detail::Bar> bars;
      for (const auto& k : kpis)
        if (k.group == g)
          bars.push_back({k.name, k.percentage,
                          percentage_text(k.percentage) + "% (" + std::to_string(k.numerator) + "/" +
                              std::to_string(k.denominator) + ")"});
      h += report_detail::bar_chart(g, bars);
      h += "<table class=\"kpis\">\n<tr><th>KPI</th><th>Polarity</th><th>Count</th><th>Of</th><th>%</th><th>Missing</th></tr>\n";
      for (const auto& k : kpis)
        if (k.group == g)
          h += "<tr><td>" + escape(k.name) + "</td><td>" + std::string(to_string(k.polarity)) + "</td><td class=\"num\">" +
               std::to_string(k.numerator) + "</td><td class=\"num\">" + std::to_string(k.denominator) +
               "</td><td class=\"num\">" + percentage_text(k.percentage) + "</td><td class=\"num\">" +
               std::to_string(k.missing) + "</td></tr>\n";
      h += "</table>\n";
    }
    std::int64_t missing = 0;
    for (const auto& k : kpis) missing += k.missing;
    if (missing > 0)
      h += "<p class=\"note\">Coverage: " + std::to_string(missing) +
           " missing responses across all KPIs; see the Missing column for each KPI.</p>\n";
  }

  // Ranking
  struct Ranked {
    std::string org;
    double dti;
    const Json* row;
  };
  std::vector<Ranked> ranked;
  for (const auto& org : dti_table.at("organizations"))
    ranked.push_back({org.at("org_id").get<std::string>(), org.at("dti").get<double>(), &org});
  std::stable_sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    return a.dti != b.dti ? a.dti > b.dti : a.org < b.org;
  });
  h += "<h2>DTI ranking</h2>\n<table class=\"ranking\">\n<tr><th>Rank</th><th>Organization</th><th>DTI</th></tr>\n";
  for (std::size_t i = 0; i < ranked.size(); ++i)
    h += "<tr><td class=\"num\">" + std::to_string(i + 1) + "</td><td>" + escape(ranked[i].org) +
         "</td><td class=\"num\">" + ranked[i].row->at("dti").dump() + "</td></tr>\n";
  h += "</table>\n";

  // Per-dimension table, in ranking order
  h += "<h2>Dimension scores</h2>\n<table class=\"dimensions\">\n<tr><th>Organization</th>";
  std::vector<std::string> dims;
  for (const auto& [dim, _] : summary.at("dimension_means").items()) dims.push_back(dim);
  for (const auto& d : dims) h += "<th>" + escape(d) + "</th>";
  h += "</tr>\n";
  for (const auto& r : ranked) {
    h += "<tr><td>" + escape(r.org) + "</td>";
    for (const auto& d : dims) h += "<td class=\"num\">" + r.row->at("dimensions").at(d).dump() + "</td>";
    h += "</tr>\n";
  }
  h += "</table>\n";

  if (readiness) {
    h += "<h2>Sensor readiness</h2>\n<p class=\"note\">" + escape(kReadinessCaveat) + "</p>\n";
    std::vector<report_detail::Bar> bars;
    for (auto c : kSensorCategories) {
      const double m = round_half_up(readiness->dataset_means[static_cast<std::size_t>(c)], 2);
      bars.push_back({std::string(display_name(c)), m, number_text(m)});
    }
    h += report_detail::bar_chart("Sensor readiness", bars);
    h += "<table class=\"readiness\">\n<tr><th>Category</th><th>Dataset mean</th></tr>\n";
    for (auto c : kSensorCategories)
      h += "<tr><td>" + escape(display_name(c)) + "</td><td class=\"num\">" +
           number_text(round_half_up(readiness->dataset_means[static_cast<std::size_t>(c)], 2)) + "</td></tr>\n";
    h += "</table>\n<h3>Largest gaps</h3>\n<table class=\"gaps\">\n<tr><th>Organization</th><th>Category</th><th>Score</th></tr>\n";
    const std::size_t shown = std::min<std::size_t>(readiness->gaps.size(), 15);
    for (std::size_t i = 0; i < shown; ++i) {
      const auto& g = readiness->gaps[i];
      h += "<tr><td>" + escape(g.org_id) + "</td><td>" + escape(display_name(g.category)) + "</td><td class=\"num\">" +
           number_text(round_half_up(g.score, 2)) + "</td></tr>\n";
    }
    h += "</table>\n";
  }
  h += "</body>\n</html>\n";
  return h;
}

/// Writes `<out_dir>/index.html` and returns its path.
inline std::filesystem::path render_report(const std::vector<KpiRecord>& kpis, const Json& dti_table,
                                           const std::optional<ReadinessReport>& readiness,
                                           const std::filesystem::path& out_dir) {
  const auto path = out_dir / "index.html";
  write_file(path, render_report_html(kpis, dti_table, readiness));
  return path;
}

}  // namespace dti

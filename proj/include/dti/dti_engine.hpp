#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dti/csv.hpp"
#include "dti/error.hpp"
#include "dti/io.hpp"
#include "dti/survey.hpp"

namespace dti {

struct WeightedField {
  std::string field;
  double weight = 1.0;
};

/// Which survey fields feed each dimension. Per-field weights default to 1 (plain mean).
struct DimensionMapping {
  std::vector<std::pair<std::string, std::vector<WeightedField>>> assignments;

  const std::vector<WeightedField>* find(const std::string& dimension) const {
    for (const auto& [name, fields] : assignments)
      if (name == dimension) return &fields;
    return nullptr;
  }
};

/// Two-layer index weights. Layer sums must equal the layer shares; shares sum to one.
struct WeightConfig {
  std::vector<std::pair<std::string, double>> core_weights;
  std::vector<std::pair<std::string, double>> context_weights;
  double core_share = 0.70;
  double context_share = 0.30;

  /// All dimensions, core layer first.
  std::vector<std::pair<std::string, double>> all() const {
    auto out = core_weights;
    out.insert(out.end(), context_weights.begin(), context_weights.end());
    return out;
  }
};

inline constexpr double kWeightTolerance = 1e-9;

/// The municipal configuration: five core dimensions (70%) and two context dimensions (30%).
inline WeightConfig default_weights() {
  WeightConfig w;
  w.core_weights = {{"Communication Infrastructure", 0.10},
                    {"Backoffice", 0.10},
                    {"ICT Equipment", 0.20},
                    {"Digital Services", 0.20},
                    {"Strategic Planning", 0.10}};
  w.context_weights = {{"Smart Cities", 0.20}, {"Smart Tourism Destination", 0.10}};
  return w;
}

inline void validate(const WeightConfig& w) {
  auto check_layer = [](const auto& layer, double share, const char* label) {
    double sum = 0.0;
    for (const auto& [name, weight] : layer) {
      if (!std::isfinite(weight) || weight < 0.0)
        throw ValidationError(std::string(label) + " weight for '" + name + "' must be a nonnegative number");
      sum += weight;
    }
    if (std::abs(sum - share) > kWeightTolerance)
      throw ValidationError(std::string(label) + " weights sum to " + number_text(sum) + ", expected share " +
                            number_text(share));
  };
  if (!(w.core_share >= 0.0) || !(w.context_share >= 0.0))
    throw ValidationError("layer shares must be nonnegative");
  if (std::abs(w.core_share + w.context_share - 1.0) > kWeightTolerance)
    throw ValidationError("core_share + context_share = " + number_text(w.core_share + w.context_share) +
                          ", expected 1");
  check_layer(w.core_weights, w.core_share, "core");
  check_layer(w.context_weights, w.context_share, "context");
  std::set<std::string> names;
  for (const auto& [name, _] : w.all())
    if (!names.insert(name).second) throw ValidationError("dimension '" + name + "' weighted twice");
}

inline void validate(const DimensionMapping& mapping, const SurveySchema& schema, const WeightConfig& weights) {
  std::set<std::string> used;
  for (const auto& [dim, fields] : mapping.assignments) {
    for (const auto& wf : fields) {
      if (!schema.contains(wf.field))
        throw ValidationError("dimension '" + dim + "' references unknown field '" + wf.field + "'");
      if (!used.insert(wf.field).second)
        throw ValidationError("field '" + wf.field + "' is assigned to more than one dimension");
      if (!std::isfinite(wf.weight) || wf.weight <= 0.0)
        throw ValidationError("field '" + wf.field + "' in dimension '" + dim + "' has a non-positive weight");
    }
  }
  for (const auto& [dim, _] : weights.all()) {
    const auto* fields = mapping.find(dim);
    if (!fields || fields->empty()) throw ValidationError("dimension '" + dim + "' has no assigned fields");
  }
}

struct DimensionScore {
  double value = 0.0;       // in [0,100]
  bool no_coverage = false;  // every assigned field was missing
};

struct DtiScore {
  double value = 0.0;
  std::vector<std::pair<std::string, double>> dimension_scores;
  std::vector<std::string> uncovered_dimensions;

  std::optional<double> dimension(const std::string& name) const {
    for (const auto& [n, v] : dimension_scores)
      if (n == name) return v;
    return std::nullopt;
  }
};

/// 100 x weighted mean of response/max over the dimension's non-missing fields.
inline DimensionScore dimension_score(const SurveyRecord& record, const std::string& dimension,
                                      const DimensionMapping& mapping, int max_value = 4) {
  const auto* fields = mapping.find(dimension);
  if (!fields) throw ValidationError("unknown dimension '" + dimension + "'");
  double num = 0.0, den = 0.0;
  for (const auto& wf : *fields) {
    auto v = record.response(wf.field);
    if (!v) continue;
    num += wf.weight * (static_cast<double>(*v) / max_value);
    den += wf.weight;
  }
  if (den == 0.0) return {0.0, true};
  return {std::clamp(100.0 * num / den, 0.0, 100.0), false};
}

/// Assumes `mapping` and `weights` were validated; see the overload that does it.
inline DtiScore compute_dti_unchecked(const SurveyRecord& record, const DimensionMapping& mapping,
                                      const WeightConfig& weights, int max_value = 4) {
  DtiScore out;
  double total = 0.0;
  for (const auto& [dim, w] : weights.all()) {
    auto s = dimension_score(record, dim, mapping, max_value);
    out.dimension_scores.emplace_back(dim, s.value);
    if (s.no_coverage) out.uncovered_dimensions.push_back(dim);
    total += w * s.value;
  }
  // Layer sums are only equal to 1 within tolerance; keep the result in range.
  out.value = std::clamp(total, 0.0, 100.0);
  return out;
}

inline DtiScore compute_dti(const SurveyRecord& record, const DimensionMapping& mapping, const WeightConfig& weights,
                            const SurveySchema& schema) {
  validate(weights);
  validate(mapping, schema, weights);
  return compute_dti_unchecked(record, mapping, weights, schema.max_value);
}

/// Moves the core/context split to `new_core_share`, keeping within-layer ratios.
inline WeightConfig reweight(const WeightConfig& weights, double new_core_share) {
  if (!(new_core_share > 0.0 && new_core_share < 1.0))
    throw ValidationError("core share must lie strictly between 0 and 1, got " + number_text(new_core_share));
  validate(weights);
  if (weights.core_share <= 0.0 || weights.context_share <= 0.0)
    throw ValidationError("cannot rescale a layer whose current share is zero");
  WeightConfig out = weights;
  const double new_context_share = 1.0 - new_core_share;
  const double core_ratio = new_core_share / weights.core_share;
  const double context_ratio = new_context_share / weights.context_share;
  for (auto& [_, w] : out.core_weights) w *= core_ratio;
  for (auto& [_, w] : out.context_weights) w *= context_ratio;
  out.core_share = new_core_share;
  out.context_share = new_context_share;
  return out;
}

// ---- configuration documents ----

inline Json weights_to_json(const WeightConfig& w) {
  Json j;
  j["core_share"] = w.core_share;
  j["context_share"] = w.context_share;
  j["core_weights"] = Json::object();
  for (const auto& [n, v] : w.core_weights) j["core_weights"][n] = v;
  j["context_weights"] = Json::object();
  for (const auto& [n, v] : w.context_weights) j["context_weights"][n] = v;
  return j;
}

inline WeightConfig weights_from_json(const Json& j) {
  WeightConfig w;
  try {
    w.core_share = j.value("core_share", 0.70);
    w.context_share = j.value("context_share", 0.30);
    w.core_weights.clear();
    w.context_weights.clear();
    for (const auto& [n, v] : j.at("core_weights").items()) w.core_weights.emplace_back(n, v.get<double>());
    for (const auto& [n, v] : j.at("context_weights").items()) w.context_weights.emplace_back(n, v.get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("invalid weights section: ") + e.what());
  }
  return w;
}

/// `{"dimension": ["field", {"field": "...", "weight": 2.0}, ...], ...}`
inline DimensionMapping mapping_from_json(const Json& j) {
  DimensionMapping m;
  try {
    for (const auto& [dim, fields] : j.items()) {
      std::vector<WeightedField> list;
      for (const auto& f : fields) {
        if (f.is_string()) list.push_back({f.get<std::string>(), 1.0});
        else list.push_back({f.at("field").get<std::string>(), f.value("weight", 1.0)});
      }
      m.assignments.emplace_back(dim, std::move(list));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("invalid dimension mapping: ") + e.what());
  }
  return m;
}

inline Json mapping_to_json(const DimensionMapping& m) {
  Json j = Json::object();
  for (const auto& [dim, fields] : m.assignments) {
    Json arr = Json::array();
    for (const auto& f : fields) {
      if (f.weight == 1.0) arr.push_back(f.field);
      else arr.push_back(Json{{"field", f.field}, {"weight", f.weight}});
    }
    j[dim] = std::move(arr);
  }
  return j;
}

}  // namespace dti

namespace dti {

/// One row of the exported index table.
struct DtiRow {
  std::string org_id;
  DtiScore score;
};

/// `org_id,<dimension...>,dti`; figures rounded half-up to two decimals.
inline std::string format_dti_csv(const std::vector<DtiRow>& rows, const WeightConfig& weights) {
  std::vector<std::string> header{"org_id"};
  for (const auto& [dim, _] : weights.all()) header.push_back(dim);
  header.push_back("dti");
  std::string out = csv::format_row(header);
  for (const auto& r : rows) {
    std::vector<std::string> cells{r.org_id};
    for (const auto& [dim, _] : weights.all()) cells.push_back(number_text(round_half_up(r.score.dimension(dim).value_or(0.0), 2)));
    cells.push_back(number_text(round_half_up(r.score.value, 2)));
    out += csv::format_row(cells);
  }
  return out;
}

inline Json dti_table_to_json(const std::vector<DtiRow>& rows, const WeightConfig& weights) {
  Json j;
  j["weights"] = weights_to_json(weights);
  j["organizations"] = Json::array();
  double total = 0.0;
  std::vector<double> dim_totals(weights.all().size(), 0.0);
  for (const auto& r : rows) {
    Json e;
    e["org_id"] = r.org_id;
    e["dti"] = round_half_up(r.score.value, 2);
    e["dimensions"] = Json::object();
    std::size_t d = 0;
    for (const auto& [dim, _] : weights.all()) {
      const double v = r.score.dimension(dim).value_or(0.0);
      e["dimensions"][dim] = round_half_up(v, 2);
      dim_totals[d++] += v;
    }
    if (!r.score.uncovered_dimensions.empty()) e["uncovered_dimensions"] = r.score.uncovered_dimensions;
    total += r.score.value;
    j["organizations"].push_back(std::move(e));
  }
  Json summary;
  summary["count"] = rows.size();
  summary["mean_dti"] = rows.empty() ? 0.0 : round_half_up(total / static_cast<double>(rows.size()), 2);
  summary["dimension_means"] = Json::object();
  std::size_t d = 0;
  for (const auto& [dim, _] : weights.all())
    summary["dimension_means"][dim] = rows.empty() ? 0.0 : round_half_up(dim_totals[d++] / static_cast<double>(rows.size()), 2);
  j["summary"] = std::move(summary);
  return j;
}

/// Reads the `dti` column of an exported index table: org_id -> DTI.
inline std::map<std::string, double> parse_dti_labels(std::string_view text, const std::string& source = "<dti>") {
  auto rows = csv::parse(text, source);
  if (rows.empty() || rows[0].cells.empty() || rows[0].cells[0] != "org_id")
    throw ValidationError(source + ": expected an index table with an org_id column");
  const auto& header = rows[0].cells;
  auto it = std::find(header.begin(), header.end(), "dti");
  if (it == header.end()) throw ValidationError(source + ": no 'dti' column");
  const auto col = static_cast<std::size_t>(it - header.begin());
  std::map<std::string, double> labels;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    double v;
    if (rows[r].cells.size() <= col || !parse_double(rows[r].cells[col], v))
      throw ValidationError(source + ": row " + std::to_string(rows[r].line) + " has no numeric dti");
    labels[rows[r].cells[0]] = v;
  }
  return labels;
}

}  // namespace dti

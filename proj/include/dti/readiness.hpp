#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "dti/csv.hpp"
#include "dti/error.hpp"
#include "dti/io.hpp"
#include "dti/survey.hpp"

namespace dti {

enum class SensorCategory { TrafficMobility, RiskSafety, EnvironmentalHealth, EnergyManagement, WasteCleanliness };

inline constexpr std::array<SensorCategory, 5> kSensorCategories = {
    SensorCategory::TrafficMobility, SensorCategory::RiskSafety, SensorCategory::EnvironmentalHealth,
    SensorCategory::EnergyManagement, SensorCategory::WasteCleanliness};

inline std::string_view key(SensorCategory c) {
  switch (c) {
    case SensorCategory::TrafficMobility: return "TrafficMobility";
    case SensorCategory::RiskSafety: return "RiskSafety";
    case SensorCategory::EnvironmentalHealth: return "EnvironmentalHealth";
    case SensorCategory::EnergyManagement: return "EnergyManagement";
    case SensorCategory::WasteCleanliness: return "WasteCleanliness";
  }
  return "";
}

inline std::string_view display_name(SensorCategory c) {
  switch (c) {
    case SensorCategory::TrafficMobility: return "Traffic and Mobility Control";
    case SensorCategory::RiskSafety: return "Risk and Safety Monitoring";
    case SensorCategory::EnvironmentalHealth: return "Environmental Health Surveillance";
    case SensorCategory::EnergyManagement: return "Energy Monitoring and Management";
    case SensorCategory::WasteCleanliness: return "Urban Cleanliness and Waste Management";
  }
  return "";
}

inline SensorCategory parse_sensor_category(std::string_view s) {
  for (auto c : kSensorCategories)
    if (key(c) == s || display_name(c) == s) return c;
  throw ValidationError("unknown sensor category '" + std::string(s) + "'");
}

inline constexpr std::string_view kReadinessCaveat =
    "Readiness scores are a proxy computed from digital-service survey indicators, not from actual sensor "
    "inventories.";

using SensorMapping = std::map<SensorCategory, std::vector<std::string>>;
using CategoryScores = std::array<double, 5>;  // indexed by SensorCategory

inline void validate(const SensorMapping& mapping, const SurveySchema& schema) {
  for (auto c : kSensorCategories) {
    auto it = mapping.find(c);
    if (it == mapping.end() || it->second.empty())
      throw ValidationError("sensor category '" + std::string(key(c)) + "' has no mapped fields");
    for (const auto& f : it->second)
      if (!schema.contains(f))
        throw ValidationError("sensor category '" + std::string(key(c)) + "' references unknown field '" + f + "'");
  }
}

/// 100 x mean(response / max) over each category's non-missing mapped fields.
inline CategoryScores readiness(const SurveyRecord& record, const SensorMapping& mapping, int max_value = 4) {
  CategoryScores out{};
  for (auto c : kSensorCategories) {
    auto it = mapping.find(c);
    if (it == mapping.end() || it->second.empty())
      throw ValidationError("sensor category '" + std::string(key(c)) + "' has no mapped fields");
    double sum = 0.0;
    int n = 0;
    for (const auto& f : it->second) {
      if (auto v = record.response(f)) {
        sum += static_cast<double>(*v) / max_value;
        ++n;
      }
    }
    out[static_cast<std::size_t>(c)] = n ? 100.0 * sum / n : 0.0;
  }
  return out;
}

struct ReadinessGap {
  std::string org_id;
  SensorCategory category;
  double score;
};

struct ReadinessReport {
  std::vector<std::pair<std::string, CategoryScores>> per_org;  // input order
  CategoryScores dataset_means{};
  std::vector<ReadinessGap> gaps;  // ascending score, ties by (org_id, category)
};

inline ReadinessReport gap_report(const std::vector<SurveyRecord>& records, const SensorMapping& mapping,
                                  int max_value = 4) {
  if (records.empty()) throw ValidationError("readiness report needs at least one record");
  ReadinessReport rep;
  for (const auto& r : records) rep.per_org.emplace_back(r.org_id, readiness(r, mapping, max_value));
  for (std::size_t c = 0; c < 5; ++c) {
    double s = 0.0;
    for (const auto& [_, scores] : rep.per_org) s += scores[c];
    rep.dataset_means[c] = s / static_cast<double>(rep.per_org.size());
  }
  for (const auto& [org, scores] : rep.per_org)
    for (auto c : kSensorCategories) rep.gaps.push_back({org, c, scores[static_cast<std::size_t>(c)]});
  std::stable_sort(rep.gaps.begin(), rep.gaps.end(), [](const ReadinessGap& a, const ReadinessGap& b) {
    return std::tie(a.score, a.org_id, a.category) < std::tie(b.score, b.org_id, b.category);
  });
  return rep;
}

inline SensorMapping sensor_mapping_from_json(const Json& j) {
  SensorMapping m;
  try {
    for (const auto& [name, fields] : j.items()) m[parse_sensor_category(name)] = fields.get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("invalid sensor mapping: ") + e.what());
  }
  return m;
}

/// Exported scores are rounded half-up to two decimals.
inline Json to_json(const ReadinessReport& r) {
  Json j;
  j["caveat"] = kReadinessCaveat;
  j["categories"] = Json::array();
  for (auto c : kSensorCategories) j["categories"].push_back(Json{{"key", key(c)}, {"name", display_name(c)}});
  j["dataset_means"] = Json::object();
  for (auto c : kSensorCategories)
    j["dataset_means"][std::string(key(c))] = round_half_up(r.dataset_means[static_cast<std::size_t>(c)], 2);
  j["per_org"] = Json::array();
  for (const auto& [org, scores] : r.per_org) {
    Json e{{"org_id", org}};
    for (auto c : kSensorCategories) e[std::string(key(c))] = round_half_up(scores[static_cast<std::size_t>(c)], 2);
    j["per_org"].push_back(std::move(e));
  }
  j["gaps"] = Json::array();
  for (const auto& g : r.gaps)
    j["gaps"].push_back(Json{{"org_id", g.org_id}, {"category", key(g.category)}, {"score", round_half_up(g.score, 2)}});
  return j;
}

inline ReadinessReport readiness_from_json(const Json& j) {
  ReadinessReport r;
  try {
    for (auto c : kSensorCategories)
      r.dataset_means[static_cast<std::size_t>(c)] = j.at("dataset_means").at(std::string(key(c))).get<double>();
    for (const auto& e : j.at("per_org")) {
      CategoryScores s{};
      for (auto c : kSensorCategories) s[static_cast<std::size_t>(c)] = e.at(std::string(key(c))).get<double>();
      r.per_org.emplace_back(e.at("org_id").get<std::string>(), s);
    }
    for (const auto& g : j.at("gaps"))
      r.gaps.push_back({g.at("org_id").get<std::string>(), parse_sensor_category(g.at("category").get<std::string>()),
                        g.at("score").get<double>()});
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed readiness report: ") + e.what());
  }
  return r;
}

inline std::string format_readiness_csv(const ReadinessReport& r) {
  std::vector<std::string> header{"org_id"};
  for (auto c : kSensorCategories) header.emplace_back(key(c));
  std::string out = csv::format_row(header);
  for (const auto& [org, scores] : r.per_org) {
    std::vector<std::string> row{org};
    for (auto c : kSensorCategories) row.push_back(number_text(round_half_up(scores[static_cast<std::size_t>(c)], 2)));
    out += csv::format_row(row);
  }
  return out;
}

}  // namespace dti

#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "dti/csv.hpp"
#include "dti/error.hpp"
#include "dti/io.hpp"
#include "dti/survey.hpp"

namespace dti {

enum class Polarity { Presence, Absence };

inline std::string_view to_string(Polarity p) { return p == Polarity::Presence ? "presence" : "absence"; }

inline Polarity parse_polarity(std::string_view s) {
  if (s == "presence") return Polarity::Presence;
  if (s == "absence") return Polarity::Absence;
  throw ValidationError("unknown KPI polarity '" + std::string(s) + "' (expected presence|absence)");
}

/// Threshold test on an ordinal response, e.g. ">=1" or "=0".
struct Predicate {
  enum class Op { Eq, Ne, Ge, Gt, Le, Lt } op = Op::Ge;
  int threshold = 1;

  bool operator()(int v) const {
    switch (op) {
      case Op::Eq: return v == threshold;
      case Op::Ne: return v != threshold;
      case Op::Ge: return v >= threshold;
      case Op::Gt: return v > threshold;
      case Op::Le: return v <= threshold;
      case Op::Lt: return v < threshold;
    }
    return false;
  }

  static Predicate parse(std::string_view text) {
    auto b = text.find_first_not_of(' ');
    if (b == std::string_view::npos) throw ValidationError("empty KPI predicate");
    text.remove_prefix(b);
    Predicate p;
    std::size_t len = 1;
    if (text.starts_with(">=")) p.op = Op::Ge, len = 2;
    else if (text.starts_with("<=")) p.op = Op::Le, len = 2;
    else if (text.starts_with("!=")) p.op = Op::Ne, len = 2;
    else if (text.starts_with("==")) p.op = Op::Eq, len = 2;
    else if (text.starts_with("=")) p.op = Op::Eq;
    else if (text.starts_with(">")) p.op = Op::Gt;
    else if (text.starts_with("<")) p.op = Op::Lt;
    else throw ValidationError("KPI predicate '" + std::string(text) + "' must start with a comparison operator");
    long long t;
    if (!parse_int(text.substr(len), t)) throw ValidationError("KPI predicate '" + std::string(text) + "' needs an integer threshold");
    p.threshold = static_cast<int>(t);
    return p;
  }

  std::string str() const {
    static constexpr const char* ops[] = {"=", "!=", ">=", ">", "<=", "<"};
    return ops[static_cast<int>(op)] + std::to_string(threshold);
  }
};

/// How records with a missing response enter a KPI.
enum class KpiMissing { Exclude, CountAsZero };

struct KpiDefinition {
  std::string name;
  std::string group;
  std::string field;
  Predicate predicate;
  Polarity polarity = Polarity::Presence;
};

struct KpiRecord {
  std::string name;
  std::string group;
  std::int64_t numerator = 0;
  std::int64_t denominator = 1;
  double percentage = 0.0;  // round-half-up, one decimal
  Polarity polarity = Polarity::Presence;
  std::int64_t missing = 0;  // records with no response for the field
};

/// round_half_up(100 * numerator / denominator, 1) in exact integer arithmetic.
inline double kpi_percentage(std::int64_t numerator, std::int64_t denominator) {
  if (denominator <= 0) throw ValidationError("KPI denominator must be positive");
  if (numerator < 0 || numerator > denominator) throw ValidationError("KPI numerator must lie in [0, denominator]");
  const std::int64_t tenths = (2000 * numerator + denominator) / (2 * denominator);
  return static_cast<double>(tenths) / 10.0;
}

inline KpiRecord make_kpi(std::string name, std::int64_t numerator, std::int64_t denominator,
                          Polarity polarity = Polarity::Presence) {
  KpiRecord r;
  r.name = std::move(name);
  r.percentage = kpi_percentage(numerator, denominator);
  r.numerator = numerator;
  r.denominator = denominator;
  r.polarity = polarity;
  return r;
}

/// The figure as printed everywhere: "79.7", "0.0", "100.0".
inline std::string percentage_text(double pct) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", pct);
  return buf;
}

inline KpiRecord compute_kpi(const std::vector<SurveyRecord>& records, const KpiDefinition& def,
                             const SurveySchema& schema, KpiMissing missing = KpiMissing::Exclude) {
  if (records.empty()) throw ValidationError("KPI '" + def.name + "' needs at least one record");
  if (!schema.contains(def.field)) throw ValidationError("KPI '" + def.name + "' references unknown field '" + def.field + "'");
  std::int64_t num = 0, den = 0, miss = 0;
  for (const auto& r : records) {
    auto v = r.response(def.field);
    if (!v) {
      ++miss;
      if (missing == KpiMissing::Exclude) continue;
      v = 0;
    }
    ++den;
    if (def.predicate(*v)) ++num;
  }
  if (den == 0) throw DataError("KPI '" + def.name + "': every record is missing field '" + def.field + "'");
  KpiRecord out = make_kpi(def.name, num, den, def.polarity);
  out.group = def.group;
  out.missing = miss;
  return out;
}

inline std::vector<KpiRecord> kpi_suite(const std::vector<SurveyRecord>& records, const std::vector<KpiDefinition>& defs,
                                        const SurveySchema& schema, KpiMissing missing = KpiMissing::Exclude) {
  std::vector<KpiRecord> out;
  out.reserve(defs.size());
  for (const auto& d : defs) out.push_back(compute_kpi(records, d, schema, missing));
  return out;
}

inline std::vector<KpiDefinition> kpi_definitions_from_json(const Json& j, const SurveySchema& schema) {
  std::vector<KpiDefinition> defs;
  try {
    for (const auto& e : j) {
      KpiDefinition d;
      d.name = e.at("name").get<std::string>();
      d.group = e.value("group", std::string("General"));
      d.field = e.at("field").get<std::string>();
      d.predicate = Predicate::parse(e.value("predicate", std::string(">=1")));
      d.polarity = parse_polarity(e.value("polarity", std::string("presence")));
      if (!schema.contains(d.field)) throw ValidationError("KPI '" + d.name + "' references unknown field '" + d.field + "'");
      defs.push_back(std::move(d));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("invalid KPI definitions: ") + e.what());
  }
  return defs;
}

inline Json to_json(const KpiRecord& k) {
  Json j;
  j["name"] = k.name;
  j["group"] = k.group;
  j["numerator"] = k.numerator;
  j["denominator"] = k.denominator;
  j["percentage"] = k.percentage;
  j["polarity"] = std::string(to_string(k.polarity));
  j["missing"] = k.missing;
  return j;
}

inline KpiRecord kpi_from_json(const Json& j) {
  try {
    KpiRecord k = make_kpi(j.at("name").get<std::string>(), j.at("numerator").get<std::int64_t>(),
                           j.at("denominator").get<std::int64_t>(), parse_polarity(j.at("polarity").get<std::string>()));
    k.group = j.value("group", std::string("General"));
    k.missing = j.value("missing", std::int64_t{0});
    return k;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed KPI record: ") + e.what());
  }
}

inline std::string format_kpi_csv(const std::vector<KpiRecord>& kpis) {
  std::string out = csv::format_row({"name", "group", "numerator", "denominator", "percentage", "polarity", "missing"});
  for (const auto& k : kpis)
    out += csv::format_row({k.name, k.group, std::to_string(k.numerator), std::to_string(k.denominator),
                            percentage_text(k.percentage), std::string(to_string(k.polarity)), std::to_string(k.missing)});
  return out;
}

}  // namespace dti

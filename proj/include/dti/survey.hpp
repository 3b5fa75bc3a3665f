#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "dti/csv.hpp"
#include "dti/error.hpp"
#include "dti/io.hpp"

namespace dti {

/// Ordered list of ordinal survey fields. Order defines feature-vector layout.
struct SurveySchema {
  std::vector<std::string> field_names;
  int min_value = 0;
  int max_value = 4;

  std::size_t size() const noexcept { return field_names.size(); }

  std::optional<std::size_t> index_of(std::string_view name) const {
    auto it = std::find(field_names.begin(), field_names.end(), name);
    if (it == field_names.end()) return std::nullopt;
    return static_cast<std::size_t>(it - field_names.begin());
  }

  bool contains(std::string_view name) const { return index_of(name).has_value(); }
};

enum class PopulationStratum { Under5k, From5kTo20k, From20kTo50k, Over50k };

inline std::string_view to_string(PopulationStratum s) {
  switch (s) {
    case PopulationStratum::Under5k: return "lt5k";
    case PopulationStratum::From5kTo20k: return "5k-20k";
    case PopulationStratum::From20kTo50k: return "20k-50k";
    case PopulationStratum::Over50k: return "gt50k";
  }
  return "";
}

inline std::optional<PopulationStratum> parse_stratum(std::string_view s) {
  for (auto v : {PopulationStratum::Under5k, PopulationStratum::From5kTo20k, PopulationStratum::From20kTo50k,
                 PopulationStratum::Over50k})
    if (to_string(v) == s) return v;
  return std::nullopt;
}

/// One organization's answers. A std::nullopt response is an explicitly missing cell.
struct SurveyRecord {
  std::string org_id;
  std::map<std::string, std::optional<int>> responses;
  std::optional<int> year;
  std::optional<PopulationStratum> population_stratum;

  std::optional<int> response(const std::string& field) const {
    auto it = responses.find(field);
    return it == responses.end() ? std::nullopt : it->second;
  }

  friend bool operator==(const SurveyRecord&, const SurveyRecord&) = default;
};

/// What to put in a feature vector for a missing response.
enum class MissingPolicy { Zero, Midpoint };

inline MissingPolicy parse_missing_policy(std::string_view s) {
  if (s == "zero") return MissingPolicy::Zero;
  if (s == "midpoint") return MissingPolicy::Midpoint;
  throw ValidationError("unknown missing-value policy '" + std::string(s) + "' (expected zero|midpoint)");
}

inline SurveySchema parse_schema(std::string_view text, const std::string& source = "<schema>") {
  SurveySchema schema;
  std::map<std::string, std::size_t, std::less<>> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (line_no == 1 && line.substr(0, 3) == "\xEF\xBB\xBF") line.remove_prefix(3);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::size_t lead = line.find_first_not_of(" \t");
    if (lead == std::string_view::npos) continue;
    std::size_t trail = line.find_last_not_of(" \t");
    std::string_view name = line.substr(lead, trail - lead + 1);
    if (name.front() == '#') continue;
    if (auto it = seen.find(name); it != seen.end())
      throw ParseError(source, line_no, lead + 1,
                       "duplicate field name '" + std::string(name) + "' (first declared on line " +
                           std::to_string(it->second) + ")");
    seen.emplace(std::string(name), line_no);
    schema.field_names.emplace_back(name);
  }
  if (schema.field_names.empty()) throw ValidationError(source + ": schema declares no fields");
  return schema;
}

inline SurveySchema load_schema(const std::filesystem::path& path) {
  return parse_schema(read_file(path), path.string());
}

namespace detail {

inline std::string join_names(const std::vector<std::string>& names) {
  std::string out;
  for (const auto& n : names) {
    if (!out.empty()) out += ", ";
    out += "'" + n + "'";
  }
  return out;
}

}  // namespace detail

/// Parses survey rows. Header: `org_id`, optionally `year` and `population_stratum`,
/// then every schema field in schema order. Empty cell = missing.
inline std::vector<SurveyRecord> parse_surveys(std::string_view text, const SurveySchema& schema,
                                               const std::string& source = "<surveys>") {
  const auto rows = csv::parse(text, source);
  if (rows.empty()) throw ValidationError(source + ": no header row");
  const auto& header = rows.front().cells;
  if (header.empty() || header[0] != "org_id")
    throw ValidationError(source + ": first column must be 'org_id'");

  std::size_t first_field = 1;
  std::optional<std::size_t> year_col, stratum_col;
  while (first_field < header.size() && (header[first_field] == "year" || header[first_field] == "population_stratum")) {
    (header[first_field] == "year" ? year_col : stratum_col) = first_field;
    ++first_field;
  }

  std::vector<std::string> columns(header.begin() + static_cast<std::ptrdiff_t>(first_field), header.end());
  if (columns != schema.field_names) {
    std::set<std::string> have(columns.begin(), columns.end());
    std::set<std::string> want(schema.field_names.begin(), schema.field_names.end());
    std::vector<std::string> missing, extra;
    std::set_difference(want.begin(), want.end(), have.begin(), have.end(), std::back_inserter(missing));
    std::set_difference(have.begin(), have.end(), want.begin(), want.end(), std::back_inserter(extra));
    std::string msg = source + ": header does not match schema";
    if (!missing.empty()) msg += "; missing columns: " + detail::join_names(missing);
    if (!extra.empty()) msg += "; extra columns: " + detail::join_names(extra);
    if (missing.empty() && extra.empty()) {
      if (columns.size() != have.size()) msg += "; duplicated columns";
      else msg += "; columns are not in schema order";
    }
    throw ValidationError(msg);
  }

  std::vector<SurveyRecord> records;
  std::set<std::string> ids;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    auto where = [&](std::size_t c) {
      return source + ": row " + std::to_string(row.line) + ", column '" + header[c] + "'";
    };
    if (row.cells.size() != header.size())
      throw ValidationError(source + ": row " + std::to_string(row.line) + " has " + std::to_string(row.cells.size()) +
                            " cells, header has " + std::to_string(header.size()));
    SurveyRecord rec;
    rec.org_id = row.cells[0];
    if (rec.org_id.empty()) throw ValidationError(source + ": row " + std::to_string(row.line) + " has empty org_id");
    if (!ids.insert(rec.org_id).second)
      throw ValidationError(source + ": row " + std::to_string(row.line) + ": duplicate org_id '" + rec.org_id + "'");

    if (year_col && !row.cells[*year_col].empty()) {
      long long y;
      if (!parse_int(row.cells[*year_col], y)) throw ValidationError(where(*year_col) + ": invalid year '" + row.cells[*year_col] + "'");
      rec.year = static_cast<int>(y);
    }
    if (stratum_col && !row.cells[*stratum_col].empty()) {
      rec.population_stratum = parse_stratum(row.cells[*stratum_col]);
      if (!rec.population_stratum)
        throw ValidationError(where(*stratum_col) + ": unknown population stratum '" + row.cells[*stratum_col] + "'");
    }

    for (std::size_t c = first_field; c < header.size(); ++c) {
      const std::string& cell = row.cells[c];
      if (cell.empty()) {
        rec.responses.emplace(header[c], std::nullopt);
        continue;
      }
      long long v;
      if (!parse_int(cell, v)) throw ValidationError(where(c) + ": non-integer value '" + cell + "'");
      if (v < schema.min_value || v > schema.max_value)
        throw ValidationError(where(c) + ": value " + cell + " outside [" + std::to_string(schema.min_value) + "," +
                              std::to_string(schema.max_value) + "]");
      rec.responses.emplace(header[c], static_cast<int>(v));
    }
    records.push_back(std::move(rec));
  }
  return records;
}

inline std::vector<SurveyRecord> load_surveys(const std::filesystem::path& path, const SurveySchema& schema) {
  return parse_surveys(read_file(path), schema, path.string());
}

/// Inverse of parse_surveys. Metadata columns are written only when some record carries them.
inline std::string format_surveys(const std::vector<SurveyRecord>& records, const SurveySchema& schema) {
  const bool with_year = std::any_of(records.begin(), records.end(), [](const auto& r) { return r.year.has_value(); });
  const bool with_stratum =
      std::any_of(records.begin(), records.end(), [](const auto& r) { return r.population_stratum.has_value(); });
  std::vector<std::string> header{"org_id"};
  if (with_year) header.push_back("year");
  if (with_stratum) header.push_back("population_stratum");
  header.insert(header.end(), schema.field_names.begin(), schema.field_names.end());
  std::string out = csv::format_row(header);
  for (const auto& rec : records) {
    std::vector<std::string> cells{rec.org_id};
    if (with_year) cells.push_back(rec.year ? std::to_string(*rec.year) : "");
    if (with_stratum) cells.push_back(rec.population_stratum ? std::string(to_string(*rec.population_stratum)) : "");
    for (const auto& f : schema.field_names) {
      auto v = rec.response(f);
      cells.push_back(v ? std::to_string(*v) : "");
    }
    out += csv::format_row(cells);
  }
  return out;
}

/// Responses scaled to [0,1] by the top of the ordinal range, in schema order.
inline std::vector<double> to_feature_vector(const SurveyRecord& record, const SurveySchema& schema,
                                             MissingPolicy policy = MissingPolicy::Zero) {
  std::vector<double> x;
  x.reserve(schema.size());
  const double span = static_cast<double>(schema.max_value - schema.min_value);
  for (const auto& f : schema.field_names) {
    auto v = record.response(f);
    if (v) x.push_back(static_cast<double>(*v - schema.min_value) / span);
    else x.push_back(policy == MissingPolicy::Zero ? 0.0 : 0.5);
  }
  return x;
}

/// Embeds a record as a JSON object (missing responses as null), fields in schema order.
inline Json survey_to_json(const SurveyRecord& record, const SurveySchema& schema) {
  Json j = Json::object();
  j["org_id"] = record.org_id;
  if (record.year) j["year"] = *record.year;
  if (record.population_stratum) j["population_stratum"] = std::string(to_string(*record.population_stratum));
  Json responses = Json::object();
  for (const auto& f : schema.field_names) {
    auto v = record.response(f);
    responses[f] = v ? Json(*v) : Json(nullptr);
  }
  j["responses"] = std::move(responses);
  return j;
}

}  // namespace dti

#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "dti/crawler.hpp"
#include "dti/csv.hpp"
#include "dti/error.hpp"
#include "dti/html_text.hpp"
#include "dti/io.hpp"
#include "dti/survey.hpp"

namespace dti {

struct Site {
  std::string org_id;
  std::string seed_url;
};

/// Cleaned web text for one organization, optionally labeled and merged with its survey.
struct CorpusDocument {
  std::string org_id;
  std::string text;
  std::vector<std::string> source_urls;
  std::optional<double> dti_label;
  std::optional<Json> survey;
  std::vector<std::string> warnings;
};

/// Raw crawl output for one organization, before extraction and cleaning.
struct SiteCrawl {
  std::string org_id;
  std::string seed_url;
  std::vector<CrawledPage> pages;
  std::vector<FetchLogEntry> log;
  std::vector<std::string> warnings;
};

/// `org_id,seed_url` with a header row.
inline std::vector<Site> parse_sites(std::string_view text, const std::string& source = "<sites>") {
  auto rows = csv::parse(text, source);
  if (rows.empty() || rows[0].cells.size() < 2 || rows[0].cells[0] != "org_id" || rows[0].cells[1] != "seed_url")
    throw ValidationError(source + ": expected header 'org_id,seed_url'");
  std::vector<Site> sites;
  std::set<std::string> ids;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& c = rows[r].cells;
    if (c.size() < 2 || c[0].empty())
      throw ValidationError(source + ": row " + std::to_string(rows[r].line) + " needs org_id and seed_url");
    if (!ids.insert(c[0]).second)
      throw ValidationError(source + ": row " + std::to_string(rows[r].line) + ": duplicate org_id '" + c[0] + "'");
    if (!parse_url(c[1]))
      throw ValidationError(source + ": row " + std::to_string(rows[r].line) + ": seed '" + c[1] +
                            "' is not an absolute http(s) URL");
    sites.push_back({c[0], c[1]});
  }
  return sites;
}

/// One organization per line: `org_id<TAB>name<TAB>demonym1,demonym2,...`. `#` comments.
inline Gazetteer parse_gazetteer(std::string_view text, const std::string& source = "<gazetteer>") {
  Gazetteer g;
  std::size_t line_no = 0, pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string line(text.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto t1 = line.find('\t');
    if (t1 == std::string::npos) throw ParseError(source, line_no, 1, "expected org_id<TAB>name[<TAB>demonyms]");
    auto t2 = line.find('\t', t1 + 1);
    Gazetteer::Entry e;
    e.org_id = line.substr(0, t1);
    e.name = line.substr(t1 + 1, t2 == std::string::npos ? std::string::npos : t2 - t1 - 1);
    if (e.name.empty()) throw ParseError(source, line_no, t1 + 2, "empty organization name");
    if (t2 != std::string::npos) {
      std::string rest = line.substr(t2 + 1);
      std::size_t i = 0;
      while (i <= rest.size()) {
        auto j = rest.find(',', i);
        if (j == std::string::npos) j = rest.size();
        std::string d = rest.substr(i, j - i);
        auto b = d.find_first_not_of(' ');
        if (b != std::string::npos) e.demonyms.push_back(d.substr(b, d.find_last_not_of(' ') - b + 1));
        i = j + 1;
      }
    }
    g.entries.push_back(std::move(e));
  }
  return g;
}

/// Crawls every site. Sites run on up to `workers` threads; results, logs and
/// warnings are returned in input order. A seed failure yields an empty crawl plus
/// a warning rather than an exception.
inline std::vector<SiteCrawl> crawl_sites(const std::vector<Site>& sites, const CrawlPolicy& policy, Fetcher& fetcher,
                                          Clock& clock, unsigned workers = 1) {
  std::vector<SiteCrawl> out(sites.size());
  HostGate gate;
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < sites.size(); i = next++) {
      SiteCrawl& sc = out[i];
      sc.org_id = sites[i].org_id;
      sc.seed_url = sites[i].seed_url;
      auto seed = parse_url(sites[i].seed_url);
      if (!seed) {
        sc.warnings.push_back("invalid seed URL '" + sites[i].seed_url + "'");
        continue;
      }
      try {
        CrawlResult r = crawl(*seed, policy, fetcher, clock, gate);
        sc.pages = std::move(r.pages);
        sc.log = std::move(r.log);
        sc.warnings = std::move(r.warnings);
      } catch (const DataError& e) {
        sc.warnings.push_back(e.what());
      }
    }
  };
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(sites.size())));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return out;
}

/// Extracts, cleans and concatenates a crawl into one document.
inline CorpusDocument assemble_document(const SiteCrawl& crawl, const std::vector<std::string>& gazetteer_terms,
                                        std::optional<double> label, std::optional<Json> survey) {
  CorpusDocument doc;
  doc.org_id = crawl.org_id;
  doc.warnings = crawl.warnings;
  for (const auto& page : crawl.pages) {
    doc.source_urls.push_back(page.url);
    std::string cleaned = clean_text(extract_text(page.html), gazetteer_terms);
    if (cleaned.empty()) continue;
    if (!doc.text.empty()) doc.text.push_back(' ');
    doc.text += cleaned;
  }
  if (crawl.pages.empty()) doc.warnings.push_back("no pages fetched for '" + crawl.org_id + "'; text is empty");
  doc.dti_label = label;
  doc.survey = std::move(survey);
  return doc;
}

/// Crawl, extract, clean and label: one document per site, in site order.
inline std::vector<CorpusDocument> build_corpus(const std::vector<Site>& sites, const CrawlPolicy& policy,
                                                const Gazetteer& gazetteer, const std::map<std::string, double>& labels,
                                                Fetcher& fetcher, Clock& clock, unsigned workers = 1) {
  std::set<std::string> ids;
  for (const auto& s : sites)
    if (!ids.insert(s.org_id).second) throw ValidationError("duplicate org_id '" + s.org_id + "' in site list");
  const auto terms = gazetteer.normalized_terms();
  std::vector<CorpusDocument> docs;
  for (const auto& sc : crawl_sites(sites, policy, fetcher, clock, workers)) {
    auto it = labels.find(sc.org_id);
    docs.push_back(assemble_document(sc, terms, it == labels.end() ? std::nullopt : std::optional(it->second),
                                     std::nullopt));
  }
  return docs;
}

// ---- persistence ----

inline Json to_json(const CorpusDocument& d) {
  Json j;
  j["org_id"] = d.org_id;
  j["text"] = d.text;
  j["source_urls"] = d.source_urls;
  j["dti"] = d.dti_label ? Json(*d.dti_label) : Json(nullptr);
  j["survey"] = d.survey ? *d.survey : Json(nullptr);
  if (!d.warnings.empty()) j["warnings"] = d.warnings;
  return j;
}

inline CorpusDocument document_from_json(const Json& j) {
  try {
    CorpusDocument d;
    d.org_id = j.at("org_id").get<std::string>();
    d.text = j.at("text").get<std::string>();
    d.source_urls = j.at("source_urls").get<std::vector<std::string>>();
    if (j.contains("dti") && !j["dti"].is_null()) d.dti_label = j["dti"].get<double>();
    if (j.contains("survey") && !j["survey"].is_null()) d.survey = j["survey"];
    if (j.contains("warnings")) d.warnings = j["warnings"].get<std::vector<std::string>>();
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed corpus document: ") + e.what());
  }
}

/// File stem for an org id: characters outside [A-Za-z0-9_-] become '_'.
inline std::string file_stem(std::string_view org_id) {
  std::string s(org_id);
  for (auto& c : s)
    if (!((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-')) c = '_';
  return s;
}

/// Writes `<dir>/<org>.json` per document plus `<dir>/manifest.json`.
inline void write_corpus(const std::filesystem::path& dir, const std::vector<CorpusDocument>& docs) {
  Json manifest;
  manifest["documents"] = Json::array();
  std::set<std::string> stems;
  for (const auto& d : docs) {
    std::string stem = file_stem(d.org_id);
    if (!stems.insert(stem).second)
      throw ValidationError("org ids collide on file name '" + stem + ".json'");
    write_json(dir / (stem + ".json"), to_json(d));
    Json entry;
    entry["org_id"] = d.org_id;
    entry["file"] = stem + ".json";
    entry["chars"] = d.text.size();
    entry["pages"] = d.source_urls.size();
    entry["dti"] = d.dti_label ? Json(*d.dti_label) : Json(nullptr);
    manifest["documents"].push_back(std::move(entry));
  }
  write_json(dir / "manifest.json", manifest);
}

inline std::vector<CorpusDocument> read_corpus(const std::filesystem::path& dir) {
  Json manifest = read_json(dir / "manifest.json");
  std::vector<CorpusDocument> docs;
  for (const auto& entry : manifest.at("documents"))
    docs.push_back(document_from_json(read_json(dir / entry.at("file").get<std::string>())));
  return docs;
}

inline Json to_json(const SiteCrawl& sc) {
  Json j;
  j["org_id"] = sc.org_id;
  j["seed_url"] = sc.seed_url;
  j["pages"] = Json::array();
  for (const auto& p : sc.pages) j["pages"].push_back(Json{{"url", p.url}, {"depth", p.depth}, {"html", p.html}});
  j["warnings"] = sc.warnings;
  return j;
}

inline SiteCrawl site_crawl_from_json(const Json& j) {
  try {
    SiteCrawl sc;
    sc.org_id = j.at("org_id").get<std::string>();
    sc.seed_url = j.at("seed_url").get<std::string>();
    for (const auto& p : j.at("pages"))
      sc.pages.push_back({p.at("url").get<std::string>(), p.at("depth").get<int>(), p.at("html").get<std::string>()});
    sc.warnings = j.value("warnings", std::vector<std::string>{});
    return sc;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed crawl record: ") + e.what());
  }
}

}  // namespace dti

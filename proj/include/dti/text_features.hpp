#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dti/error.hpp"
#include "dti/io.hpp"

namespace dti {

/// 64-bit FNV-1a with the seed folded into the offset basis.
inline std::uint64_t hash_token(std::string_view token, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ (seed * 0x9e3779b97f4a7c15ULL);
  for (unsigned char c : token) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline bool is_edge_punct(char c) {
  switch (c) {
    case '.': case ',': case ';': case ':': case '!': case '?': case '\'': case '"': case '(': case ')': case '-':
      return true;
    default:
      return false;
  }
}

/// Whitespace split; surrounding punctuation trimmed; tokens under two characters and
/// stopwords dropped.
inline std::vector<std::string> tokenize(std::string_view text, const std::set<std::string, std::less<>>& stopwords = {}) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t' || text[i] == '\n' || text[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < text.size() && !(text[j] == ' ' || text[j] == '\t' || text[j] == '\n' || text[j] == '\r')) ++j;
    std::string_view tok = text.substr(i, j - i);
    while (!tok.empty() && is_edge_punct(tok.front())) tok.remove_prefix(1);
    while (!tok.empty() && is_edge_punct(tok.back())) tok.remove_suffix(1);
    if (tok.size() >= 2 && !stopwords.contains(tok)) out.emplace_back(tok);
    i = j;
  }
  return out;
}

inline std::set<std::string, std::less<>> parse_stopwords(std::string_view text) {
  std::set<std::string, std::less<>> words;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    auto b = line.find_first_not_of(" \t\r");
    if (b == std::string_view::npos || line[b] == '#') continue;
    auto e = line.find_last_not_of(" \t\r");
    words.emplace(line.substr(b, e - b + 1));
  }
  return words;
}

/// Hashed bag-of-words with smoothed inverse document frequency.
class Vectorizer {
public:
  struct FitReport {
    std::size_t documents = 0;
    std::size_t vocabulary = 0;  // distinct tokens seen during fit
    std::size_t occupied_buckets = 0;
    std::map<std::size_t, std::size_t> occupancy;  // tokens-per-bucket -> bucket count
  };

  Vectorizer() = default;

  /// idf[j] = ln((1 + N) / (1 + df_j)) + 1, df_j = documents with a token in bucket j.
  static Vectorizer fit(std::span<const std::string> documents, std::size_t dim,
                        std::set<std::string, std::less<>> stopwords, std::uint64_t hash_seed,
                        FitReport* report = nullptr, std::size_t max_chars = 0) {
    if (documents.empty()) throw ValidationError("cannot fit a vectorizer on an empty corpus");
    if (dim == 0 || (dim & (dim - 1)) != 0) throw ValidationError("feature dimension must be a power of two");
    Vectorizer v;
    v.dim_ = dim;
    v.seed_ = hash_seed;
    v.stopwords_ = std::move(stopwords);
    v.max_chars_ = max_chars;
    std::vector<std::size_t> df(dim, 0);
    std::set<std::string> vocabulary;
    std::vector<std::uint8_t> hit(dim, 0);
    for (const auto& doc : documents) {
      std::fill(hit.begin(), hit.end(), 0);
      for (const auto& tok : tokenize(v.truncate(doc), v.stopwords_)) {
        hit[v.bucket(tok)] = 1;
        if (report) vocabulary.insert(tok);
      }
      for (std::size_t j = 0; j < dim; ++j) df[j] += hit[j];
    }
    const double n = static_cast<double>(documents.size());
    v.idf_.resize(dim);
    for (std::size_t j = 0; j < dim; ++j) v.idf_[j] = std::log((1.0 + n) / (1.0 + static_cast<double>(df[j]))) + 1.0;
    v.fitted_ = true;

    if (report) {
      *report = FitReport{};
      report->documents = documents.size();
      report->vocabulary = vocabulary.size();
      std::vector<std::size_t> per_bucket(dim, 0);
      for (const auto& tok : vocabulary) ++per_bucket[v.bucket(tok)];
      for (auto c : per_bucket) {
        ++report->occupancy[c];
        if (c) ++report->occupied_buckets;
      }
    }
    return v;
  }

  /// Bucket counts times idf, L2-normalized. A text with no tokens maps to zeros.
  std::vector<double> transform(std::string_view text) const {
    if (!fitted_) throw ValidationError("vectorizer used before fit");
    std::vector<double> x(dim_, 0.0);
    for (const auto& tok : tokenize(truncate(text), stopwords_)) x[bucket(tok)] += 1.0;
    double sq = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) {
      x[j] *= idf_[j];
      sq += x[j] * x[j];
    }
    if (sq > 0.0) {
      const double inv = 1.0 / std::sqrt(sq);
      for (auto& v : x) v *= inv;
    }
    return x;
  }

  std::size_t bucket(std::string_view token) const { return static_cast<std::size_t>(hash_token(token, seed_) & (dim_ - 1)); }

  std::size_t dim() const noexcept { return dim_; }
  std::uint64_t hash_seed() const noexcept { return seed_; }
  std::size_t max_chars() const noexcept { return max_chars_; }
  bool fitted() const noexcept { return fitted_; }
  const std::vector<double>& idf() const noexcept { return idf_; }
  const std::set<std::string, std::less<>>& stopwords() const noexcept { return stopwords_; }

  /// Fingerprint of the stopword set (sorted, newline-joined, FNV-1a, hex).
  std::string stopword_hash() const {
    std::string joined;
    for (const auto& w : stopwords_) joined += w + "\n";
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash_token(joined, 0)));
    return buf;
  }

  Json to_json() const {
    Json j;
    j["dim"] = dim_;
    j["hash_seed"] = seed_;
    j["max_chars"] = max_chars_;
    j["stopword_hash"] = stopword_hash();
    j["stopwords"] = std::vector<std::string>(stopwords_.begin(), stopwords_.end());
    j["idf"] = idf_;
    return j;
  }

  static Vectorizer from_json(const Json& j) {
    Vectorizer v;
    try {
      v.dim_ = j.at("dim").get<std::size_t>();
      v.seed_ = j.at("hash_seed").get<std::uint64_t>();
      v.max_chars_ = j.value("max_chars", std::size_t{0});
      for (const auto& w : j.at("stopwords")) v.stopwords_.insert(w.get<std::string>());
      v.idf_ = j.at("idf").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("malformed vectorizer: ") + e.what());
    }
    if (v.dim_ == 0 || (v.dim_ & (v.dim_ - 1)) != 0 || v.idf_.size() != v.dim_)
      throw ValidationError("vectorizer idf length does not match a power-of-two dim");
    if (std::any_of(v.idf_.begin(), v.idf_.end(), [](double x) { return !(x >= 0.0); }))
      throw ValidationError("vectorizer idf values must be nonnegative");
    if (j.at("stopword_hash").get<std::string>() != v.stopword_hash())
      throw ValidationError("vectorizer stopword hash does not match its stopword list");
    v.fitted_ = true;
    return v;
  }

private:
  std::string_view truncate(std::string_view text) const {
    return max_chars_ && text.size() > max_chars_ ? text.substr(0, max_chars_) : text;
  }

  std::size_t dim_ = 0;
  std::uint64_t seed_ = 0;
  std::size_t max_chars_ = 0;
  std::set<std::string, std::less<>> stopwords_;
  std::vector<double> idf_;
  bool fitted_ = false;
};

inline Json to_json(const Vectorizer::FitReport& r) {
  Json j;
  j["documents"] = r.documents;
  j["vocabulary"] = r.vocabulary;
  j["occupied_buckets"] = r.occupied_buckets;
  Json hist = Json::array();
  for (const auto& [tokens, buckets] : r.occupancy) hist.push_back(Json{{"tokens_per_bucket", tokens}, {"buckets", buckets}});
  j["bucket_occupancy"] = std::move(hist);
  return j;
}

}  // namespace dti

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "dti/rng.hpp"
#include "dti/text_features.hpp"
#include "test_support.hpp"

using namespace dti;

namespace {

using Stop = std::set<std::string, std::less<>>;

double norm(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

/// Dictionary TF-IDF on a toy corpus, computed directly from token counts.
std::map<std::string, double> brute_tfidf(const std::vector<std::vector<std::string>>& docs, std::size_t which) {
  const double n = static_cast<double>(docs.size());
  std::map<std::string, double> tf, out;
  for (const auto& t : docs[which]) tf[t] += 1.0;
  double sq = 0.0;
  for (const auto& [t, c] : tf) {
    double df = 0.0;
    for (const auto& d : docs) df += std::find(d.begin(), d.end(), t) != d.end() ? 1.0 : 0.0;
    out[t] = c * (std::log((1.0 + n) / (1.0 + df)) + 1.0);
    sq += out[t] * out[t];
  }
  for (auto& [t, v] : out) v /= std::sqrt(sq);
  return out;
}

}  // namespace

TEST(HashToken, MatchesReferenceFnv1aVectors) {
  EXPECT_EQ(hash_token("", 0), 0xcbf29ce484222325ULL);
  EXPECT_EQ(hash_token("a", 0), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(hash_token("foobar", 0), 0x85944171f73967e8ULL);
  EXPECT_NE(hash_token("a", 1), hash_token("a", 0));
}

TEST(Tokenize, SplitsTrimsAndFilters) {
  EXPECT_EQ(tokenize("el ayuntamiento de la ciudad", Stop{"el", "de", "la"}),
            (std::vector<std::string>{"ayuntamiento", "ciudad"}));
  EXPECT_EQ(tokenize("  (hola),   mundo!  y  a  "), (std::vector<std::string>{"hola", "mundo"}));
  EXPECT_EQ(tokenize("d'orgtoken e-administracion 2024."),
            (std::vector<std::string>{"d'orgtoken", "e-administracion", "2024"}));
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_TRUE(tokenize("- . , x").empty());
}

TEST(Stopwords, ParseSkipsCommentsAndBlankLines) {
  auto s = parse_stopwords("# comment\nde\n  la \r\n\nel\n");
  EXPECT_EQ(s, (Stop{"de", "el", "la"}));
  auto bundled = parse_stopwords(read_file(test::data_dir() / "stopwords_es.txt"));
  EXPECT_TRUE(bundled.contains("de"));
  EXPECT_GT(bundled.size(), 50u);
}

TEST(Vectorizer, IdfClosedForm) {
  const std::vector<std::string> docs{"uno dos", "uno tres", "uno"};
  auto v = Vectorizer::fit(docs, 1024, {}, 3);
  ASSERT_NE(v.bucket("uno"), v.bucket("dos"));
  ASSERT_NE(v.bucket("dos"), v.bucket("tres"));
  EXPECT_DOUBLE_EQ(v.idf()[v.bucket("uno")], std::log(4.0 / 4.0) + 1.0);
  EXPECT_DOUBLE_EQ(v.idf()[v.bucket("dos")], std::log(4.0 / 2.0) + 1.0);
  std::size_t empty = 0;
  while (empty == v.bucket("uno") || empty == v.bucket("dos") || empty == v.bucket("tres")) ++empty;
  EXPECT_DOUBLE_EQ(v.idf()[empty], std::log(4.0) + 1.0);
}

TEST(Vectorizer, MatchesDictionaryOracleWithoutCollisions) {
  const std::vector<std::string> docs{"casa azul", "casa roja", "casa casa roja grande"};
  std::vector<std::vector<std::string>> toks;
  for (const auto& d : docs) toks.push_back(tokenize(d));
  auto v = Vectorizer::fit(docs, 4096, {}, 11);
  std::set<std::size_t> buckets;
  for (const char* t : {"casa", "azul", "roja", "grande"}) buckets.insert(v.bucket(t));
  ASSERT_EQ(buckets.size(), 4u);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    auto x = v.transform(docs[i]);
    auto expect = brute_tfidf(toks, i);
    double covered = 0.0;
    for (const auto& [t, val] : expect) {
      EXPECT_NEAR(x[v.bucket(t)], val, 1e-12) << t;
      covered += val * val;
    }
    EXPECT_NEAR(covered, 1.0, 1e-12);
  }
  // Frozen: "casa azul" -> casa idf 1, azul idf ln 2 + 1.
  auto x = v.transform("casa azul");
  const double a = std::log(2.0) + 1.0;
  EXPECT_NEAR(x[v.bucket("casa")], 1.0 / std::sqrt(1.0 + a * a), 1e-12);
  EXPECT_NEAR(x[v.bucket("azul")], a / std::sqrt(1.0 + a * a), 1e-12);
}

TEST(Vectorizer, NormDimensionAndDeterminism) {
  Rng rng(9);
  const std::vector<std::string> words{"agua", "luz", "sede", "tramite", "turismo", "playa", "web", "datos", "red"};
  std::vector<std::string> docs;
  for (int d = 0; d < 60; ++d) {
    std::string s;
    for (std::size_t k = rng.below(30); k-- > 0;) s += words[rng.below(words.size())] + " ";
    docs.push_back(s);
  }
  auto v1 = Vectorizer::fit(docs, 64, {"red"}, 5);
  auto v2 = Vectorizer::fit(docs, 64, {"red"}, 5);
  for (const auto& d : docs) {
    auto x = v1.transform(d);
    ASSERT_EQ(x.size(), 64u);
    const double n = norm(x);
    if (tokenize(d, v1.stopwords()).empty())
      EXPECT_EQ(n, 0.0);
    else
      EXPECT_NEAR(n, 1.0, 1e-12);
    for (double xi : x) EXPECT_GE(xi, 0.0);
    EXPECT_EQ(x, v2.transform(d));
  }
  EXPECT_EQ(v1.transform("red red red"), std::vector<double>(64, 0.0));
  EXPECT_EQ(v1.transform("zzz-unseen palabra"), v1.transform("zzz-unseen palabra"));
  EXPECT_NEAR(norm(v1.transform("zzz-unseen palabra")), 1.0, 1e-12);
}

TEST(Vectorizer, MaxCharsTruncates) {
  const std::vector<std::string> docs{"alfa beta gamma"};
  auto v = Vectorizer::fit(docs, 256, {}, 1, nullptr, 9);
  EXPECT_EQ(v.transform("alfa beta gamma"), v.transform("alfa beta"));
}

TEST(Vectorizer, JsonRoundTripAndTamperDetection) {
  const std::vector<std::string> docs{"uno dos", "tres"};
  auto v = Vectorizer::fit(docs, 128, {"de", "la"}, 77, nullptr, 500);
  auto back = Vectorizer::from_json(Json::parse(v.to_json().dump()));
  EXPECT_EQ(back.dim(), 128u);
  EXPECT_EQ(back.hash_seed(), 77u);
  EXPECT_EQ(back.max_chars(), 500u);
  EXPECT_EQ(back.idf(), v.idf());
  EXPECT_EQ(back.transform("uno de tres"), v.transform("uno de tres"));
  auto j = v.to_json();
  j["stopwords"].push_back("el");
  EXPECT_THROW(Vectorizer::from_json(j), ValidationError);
  j = v.to_json();
  j["idf"].erase(0);
  EXPECT_THROW(Vectorizer::from_json(j), ValidationError);
  EXPECT_THROW(Vectorizer::from_json(Json::object()), ValidationError);
}

TEST(Vectorizer, FitReportCountsOccupancy) {
  const std::vector<std::string> docs{"a1 b2 c3", "c3 d4"};
  Vectorizer::FitReport rep;
  auto v = Vectorizer::fit(docs, 2, {}, 0, &rep);
  EXPECT_EQ(rep.documents, 2u);
  EXPECT_EQ(rep.vocabulary, 4u);
  std::size_t buckets = 0, tokens = 0;
  for (const auto& [per, count] : rep.occupancy) {
    buckets += count;
    tokens += per * count;
  }
  EXPECT_EQ(buckets, 2u);
  EXPECT_EQ(tokens, 4u);
  EXPECT_EQ(rep.occupied_buckets, buckets - (rep.occupancy.count(0) ? rep.occupancy.at(0) : 0));
  auto j = to_json(rep);
  EXPECT_EQ(j["vocabulary"], 4);
}

TEST(Vectorizer, RejectsBadInputs) {
  const std::vector<std::string> none;
  const std::vector<std::string> one{"x"};
  EXPECT_THROW(Vectorizer::fit(none, 16, {}, 0), ValidationError);
  EXPECT_THROW(Vectorizer::fit(one, 0, {}, 0), ValidationError);
  EXPECT_THROW(Vectorizer::fit(one, 1000, {}, 0), ValidationError);
  EXPECT_THROW(Vectorizer{}.transform("x"), ValidationError);
  EXPECT_NO_THROW(Vectorizer::fit(one, 1, {}, 0));
}

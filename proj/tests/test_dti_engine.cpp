#include <gtest/gtest.h>
#include <string>
#include <vector>

#include "dti/dti_engine.hpp"
#include "dti/rng.hpp"
#include "dti_oracle.hpp"
#include "test_support.hpp"

using namespace dti;
using dti::test::Case;
using dti::test::oracle_dti;
using dti::test::random_case;

namespace {

struct Bundled {
  SurveySchema schema;
  DimensionMapping mapping;
};

Bundled bundled() {
  auto cfg = read_json(test::data_dir() / "config.json");
  return {load_schema(test::data_dir() / "schema.txt"), mapping_from_json(cfg["dti"]["mapping"])};
}

SurveyRecord uniform_record(const SurveySchema& s, std::optional<int> v) {
  SurveyRecord r;
  r.org_id = "u";
  for (const auto& f : s.field_names) r.responses[f] = v;
  return r;
}

}  // namespace

TEST(DimensionScore, ZeroMaxAndHandExample) {
  DimensionMapping m{{{"D", {{"a"}, {"b"}}}}};
  SurveyRecord r{"o", {{"a", 0}, {"b", 0}}, {}, {}};
  EXPECT_EQ(dimension_score(r, "D", m).value, 0.0);
  r.responses = {{"a", 4}, {"b", 4}};
  EXPECT_EQ(dimension_score(r, "D", m).value, 100.0);
  r.responses = {{"a", 1}, {"b", 3}};
  EXPECT_DOUBLE_EQ(dimension_score(r, "D", m).value, 50.0);
}

TEST(DimensionScore, MissingFieldsAreExcluded) {
  DimensionMapping m{{{"D", {{"a"}, {"b"}}}}};
  SurveyRecord r{"o", {{"a", std::nullopt}, {"b", 2}}, {}, {}};
  auto s = dimension_score(r, "D", m);
  EXPECT_DOUBLE_EQ(s.value, 50.0);
  EXPECT_FALSE(s.no_coverage);
  r.responses["b"] = std::nullopt;
  s = dimension_score(r, "D", m);
  EXPECT_EQ(s.value, 0.0);
  EXPECT_TRUE(s.no_coverage);
}

TEST(DimensionScore, UnknownDimensionThrows) {
  DimensionMapping m{{{"D", {{"a"}}}}};
  EXPECT_THROW(dimension_score(SurveyRecord{}, "E", m), ValidationError);
}

TEST(ComputeDti, DefaultWeightsExtremesAndSymmetry) {
  const auto b = bundled();
  const auto w = default_weights();
  EXPECT_EQ(compute_dti(uniform_record(b.schema, 0), b.mapping, w, b.schema).value, 0.0);
  EXPECT_EQ(compute_dti(uniform_record(b.schema, 4), b.mapping, w, b.schema).value, 100.0);
  auto half = compute_dti(uniform_record(b.schema, 2), b.mapping, w, b.schema);
  EXPECT_NEAR(half.value, 50.0, 1e-12);
  ASSERT_EQ(half.dimension_scores.size(), 7u);
  for (const auto& [dim, v] : half.dimension_scores) EXPECT_DOUBLE_EQ(v, 50.0) << dim;
}

TEST(ComputeDti, RejectsInvalidWeightsWithoutRenormalizing) {
  const auto b = bundled();
  auto w = default_weights();
  w.core_weights[0].second = 0.2;  // core layer now sums to 0.8
  EXPECT_THROW(compute_dti(uniform_record(b.schema, 2), b.mapping, w, b.schema), ValidationError);
  w = default_weights();
  w.core_weights[0].second = -0.1;
  w.core_weights[1].second = 0.3;
  EXPECT_THROW(validate(w), ValidationError);
  w = default_weights();
  w.core_share = 0.6;
  EXPECT_THROW(validate(w), ValidationError);
}

TEST(ComputeDti, MappingValidation) {
  SurveySchema s;
  s.field_names = {"a", "b", "c"};
  WeightConfig w;
  w.core_weights = {{"X", 0.7}};
  w.context_weights = {{"Y", 0.3}};
  EXPECT_NO_THROW(validate(DimensionMapping{{{"X", {{"a"}, {"b"}}}, {"Y", {{"c"}}}}}, s, w));
  EXPECT_THROW(validate(DimensionMapping{{{"X", {{"a"}, {"zz"}}}, {"Y", {{"c"}}}}}, s, w), ValidationError);
  EXPECT_THROW(validate(DimensionMapping{{{"X", {{"a"}, {"b"}}}, {"Y", {{"a"}}}}}, s, w), ValidationError);
  EXPECT_THROW(validate(DimensionMapping{{{"X", {{"a"}}}, {"Y", {}}}}, s, w), ValidationError);
  EXPECT_THROW(validate(DimensionMapping{{{"X", {{"a"}}}}}, s, w), ValidationError);
  EXPECT_THROW(validate(DimensionMapping{{{"X", {{"a", 0.0}}}, {"Y", {{"c"}}}}}, s, w), ValidationError);
}

TEST(ComputeDti, OracleEquivalenceOnRandomTriples) {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const Case c = random_case(rng);
    const auto got = compute_dti(c.record, c.mapping, c.weights, c.schema);
    ASSERT_NEAR(got.value, oracle_dti(c), 1e-9) << "trial " << trial;
    EXPECT_GE(got.value, 0.0);
    EXPECT_LE(got.value, 100.0);
    double weighted = 0.0;
    for (const auto& [dim, w] : c.weights.all()) weighted += w * *got.dimension(dim);
    EXPECT_NEAR(got.value, weighted, 1e-9);
  }
}

TEST(ComputeDti, MonotoneInEveryResponse) {
  Rng rng(77);
  for (int trial = 0; trial < 300; ++trial) {
    Case c = random_case(rng);
    const double before = compute_dti(c.record, c.mapping, c.weights, c.schema).value;
    const auto& field = c.schema.field_names[rng.below(c.schema.size())];
    auto& v = c.record.responses[field];
    if (!v || *v == 4) continue;
    *v += 1 + static_cast<int>(rng.below(static_cast<std::size_t>(4 - *v)));
    EXPECT_GE(compute_dti(c.record, c.mapping, c.weights, c.schema).value, before - 1e-12);
  }
}

TEST(Reweight, IdentityAndProportionalRescale) {
  const auto w = default_weights();
  const auto same = reweight(w, 0.70);
  for (std::size_t i = 0; i < w.core_weights.size(); ++i) EXPECT_NEAR(same.core_weights[i].second, w.core_weights[i].second, 1e-12);
  for (std::size_t i = 0; i < w.context_weights.size(); ++i)
    EXPECT_NEAR(same.context_weights[i].second, w.context_weights[i].second, 1e-12);

  const auto half = reweight(w, 0.50);
  EXPECT_NEAR(half.core_weights[0].second, 0.071429, 5e-7);  // 0.10 · 0.50 / 0.70
  EXPECT_NEAR(half.context_weights[0].second, 0.2 * 0.5 / 0.3, 1e-12);
  EXPECT_NO_THROW(validate(half));
  EXPECT_THROW(reweight(w, 1.0), ValidationError);
  EXPECT_THROW(reweight(w, 0.0), ValidationError);
}

TEST(Reweight, IdentityOnRandomConfigs) {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const Case c = random_case(rng);
    const auto back = reweight(c.weights, c.weights.core_share);
    const auto a = c.weights.all(), b2 = back.all();
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i].second, b2[i].second, 1e-12);
  }
}

TEST(DtiJson, WeightsAndMappingRoundTrip) {
  const auto w = default_weights();
  const auto w2 = weights_from_json(weights_to_json(w));
  EXPECT_EQ(w2.all(), w.all());
  DimensionMapping m{{{"X", {{"a"}, {"b", 2.5}}}}};
  auto m2 = mapping_from_json(mapping_to_json(m));
  ASSERT_EQ(m2.assignments.size(), 1u);
  EXPECT_EQ(m2.assignments[0].second[1].field, "b");
  EXPECT_EQ(m2.assignments[0].second[1].weight, 2.5);
  EXPECT_THROW(mapping_from_json(Json::parse(R"({"X": [1]})")), ValidationError);
}

TEST(DtiExport, CsvColumnsAndLabelsRoundTrip) {
  const auto b = bundled();
  const auto w = default_weights();
  std::vector<DtiRow> rows;
  rows.push_back({"A", compute_dti(uniform_record(b.schema, 4), b.mapping, w, b.schema)});
  rows.push_back({"B", compute_dti(uniform_record(b.schema, 1), b.mapping, w, b.schema)});
  const auto text = format_dti_csv(rows, w);
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "org_id,Communication Infrastructure,Backoffice,ICT Equipment,Digital Services,Strategic Planning,"
            "Smart Cities,Smart Tourism Destination,dti");
  EXPECT_NE(text.find("\nA,100.0,100.0,100.0,100.0,100.0,100.0,100.0,100.0\n"), std::string::npos) << text;
  EXPECT_NE(text.find("\nB,25.0,"), std::string::npos) << text;
  auto labels = parse_dti_labels(text);
  EXPECT_EQ(labels.at("A"), 100.0);
  EXPECT_EQ(labels.at("B"), 25.0);

  const auto j = dti_table_to_json(rows, w);
  EXPECT_EQ(j["summary"]["count"], 2);
  EXPECT_EQ(j["summary"]["mean_dti"].get<double>(), 62.5);
  EXPECT_EQ(j["organizations"][1]["dimensions"]["Backoffice"].get<double>(), 25.0);
}

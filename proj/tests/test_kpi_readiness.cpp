#include <gtest/gtest.h>

#include <cmath>

#include "dti/kpi.hpp"
#include "dti/readiness.hpp"
#include "dti/rng.hpp"
#include "dti/survey.hpp"
#include "test_support.hpp"

using namespace dti;

namespace {

SurveySchema schema_of(std::vector<std::string> names) {
  SurveySchema s;
  s.field_names = std::move(names);
  return s;
}

SurveyRecord rec(std::string id, std::map<std::string, std::optional<int>> r) {
  SurveyRecord x;
  x.org_id = std::move(id);
  x.responses = std::move(r);
  return x;
}

/// Integer quotient and remainder, rounding the remainder up when it is at least half.
std::int64_t oracle_tenths(std::int64_t num, std::int64_t den) {
  const std::int64_t q = 1000 * num / den, rem = 1000 * num % den;
  return q + (2 * rem >= den ? 1 : 0);
}

struct Bundled {
  SurveySchema schema;
  std::vector<SurveyRecord> records;
  Json config;
};

const Bundled& bundled() {
  static const Bundled b = [] {
    Bundled out;
    out.schema = parse_schema(read_file(test::data_dir() / "schema.txt"));
    out.records = parse_surveys(read_file(test::data_dir() / "fixtures" / "surveys.csv"), out.schema, "surveys.csv");
    out.config = read_json(test::data_dir() / "config.json");
    return out;
  }();
  return b;
}

}  // namespace

TEST(KpiPercentage, DashboardFractionsReproduced) {
  const std::vector<std::tuple<int, std::string>> cases{{63, "79.7"}, {71, "89.9"}, {62, "78.5"}, {42, "53.2"},
                                                        {17, "21.5"}, {22, "27.8"}, {20, "25.3"}, {16, "20.3"},
                                                        {60, "75.9"}, {64, "81.0"}};
  for (const auto& [num, text] : cases) EXPECT_EQ(percentage_text(kpi_percentage(num, 79)), text) << num;
  EXPECT_EQ(percentage_text(kpi_percentage(0, 79)), "0.0");
  EXPECT_EQ(percentage_text(kpi_percentage(79, 79)), "100.0");
}

TEST(KpiPercentage, HalfUpAtExactTies) {
  EXPECT_EQ(kpi_percentage(1, 8), 12.5);
  EXPECT_EQ(kpi_percentage(1, 16), 6.3);     // 6.25
  EXPECT_EQ(kpi_percentage(1, 80), 1.3);     // 1.25
  EXPECT_EQ(kpi_percentage(3, 80), 3.8);     // 3.75
  EXPECT_EQ(kpi_percentage(1, 2000), 0.1);   // 0.05
  EXPECT_EQ(kpi_percentage(1, 2001), 0.0);
  EXPECT_THROW(kpi_percentage(1, 0), ValidationError);
  EXPECT_THROW(kpi_percentage(5, 4), ValidationError);
  EXPECT_THROW(kpi_percentage(-1, 4), ValidationError);
}

TEST(KpiPercentage, MatchesIntegerOracleOnRandomFractions) {
  Rng rng(12);
  for (int trial = 0; trial < 5000; ++trial) {
    const auto den = static_cast<std::int64_t>(1 + rng.below(5000));
    const auto num = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(den) + 1));
    const double pct = kpi_percentage(num, den);
    EXPECT_EQ(std::llround(pct * 10.0), oracle_tenths(num, den)) << num << "/" << den;
    EXPECT_GE(pct, 0.0);
    EXPECT_LE(pct, 100.0);
  }
}

TEST(Predicate, ParseAndEvaluate) {
  auto p = Predicate::parse(">=2");
  EXPECT_FALSE(p(1));
  EXPECT_TRUE(p(2));
  EXPECT_TRUE(Predicate::parse("=0")(0));
  EXPECT_FALSE(Predicate::parse("==0")(1));
  EXPECT_TRUE(Predicate::parse("!=3")(4));
  EXPECT_TRUE(Predicate::parse("<1")(0));
  EXPECT_TRUE(Predicate::parse(" <= 2")(2));
  EXPECT_TRUE(Predicate::parse(">3")(4));
  EXPECT_EQ(Predicate::parse(">= 1").str(), ">=1");
  EXPECT_THROW(Predicate::parse("1"), ValidationError);
  EXPECT_THROW(Predicate::parse(">=x"), ValidationError);
  EXPECT_THROW(Predicate::parse(""), ValidationError);
}

TEST(ComputeKpi, CountsAndMissingPolicies) {
  auto schema = schema_of({"Plan"});
  std::vector<SurveyRecord> rs{rec("a", {{"Plan", 0}}), rec("b", {{"Plan", 2}}), rec("c", {{"Plan", std::nullopt}}),
                               rec("d", {{"Plan", 1}})};
  KpiDefinition def{"No plan", "G", "Plan", Predicate::parse("=0"), Polarity::Absence};
  auto ex = compute_kpi(rs, def, schema, KpiMissing::Exclude);
  EXPECT_EQ(ex.numerator, 1);
  EXPECT_EQ(ex.denominator, 3);
  EXPECT_EQ(ex.missing, 1);
  EXPECT_EQ(ex.percentage, 33.3);
  auto zero = compute_kpi(rs, def, schema, KpiMissing::CountAsZero);
  EXPECT_EQ(zero.numerator, 2);
  EXPECT_EQ(zero.denominator, 4);
  EXPECT_EQ(zero.percentage, 50.0);
  KpiDefinition have{"Plan", "G", "Plan", Predicate{}, Polarity::Presence};
  EXPECT_EQ(compute_kpi(rs, have, schema).numerator, 2);
  EXPECT_THROW(compute_kpi({}, def, schema), ValidationError);
  EXPECT_THROW(compute_kpi(rs, {"x", "G", "Other", {}, Polarity::Presence}, schema), ValidationError);
  EXPECT_THROW(compute_kpi({rec("z", {{"Plan", std::nullopt}})}, def, schema), DataError);
}

TEST(ComputeKpi, NoneSatisfyingGivesZero) {
  auto schema = schema_of({"F"});
  std::vector<SurveyRecord> rs;
  for (int i = 0; i < 79; ++i) rs.push_back(rec("m" + std::to_string(i), {{"F", 0}}));
  auto k = compute_kpi(rs, {"k", "G", "F", Predicate{}, Polarity::Presence}, schema);
  EXPECT_EQ(k.numerator, 0);
  EXPECT_EQ(percentage_text(k.percentage), "0.0");
}

TEST(ComputeKpi, BundledSuiteOverFixture) {
  const auto& b = bundled();
  auto defs = kpi_definitions_from_json(b.config.at("kpis").at("definitions"), b.schema);
  ASSERT_EQ(defs.size(), 10u);
  auto kpis = kpi_suite(b.records, defs, b.schema);
  const std::vector<std::string> expect{"79.7", "89.9", "78.5", "53.2", "21.5", "27.8", "25.3", "20.3", "75.9", "81.0"};
  for (std::size_t i = 0; i < kpis.size(); ++i) {
    EXPECT_EQ(percentage_text(kpis[i].percentage), expect[i]) << kpis[i].name;
    EXPECT_EQ(kpis[i].denominator, 79);
  }
  const auto csv_text = format_kpi_csv(kpis);
  EXPECT_NE(csv_text.find("No Smart City master plan,Smart City,63,79,79.7,absence,0"), std::string::npos);
  for (const auto& k : kpis) {
    auto back = kpi_from_json(to_json(k));
    EXPECT_EQ(back.percentage, k.percentage);
    EXPECT_EQ(back.group, k.group);
  }
}

TEST(KpiDefinitions, JsonValidation) {
  auto schema = schema_of({"F"});
  auto defs = kpi_definitions_from_json(Json::parse(R"([{"name":"k","field":"F"}])"), schema);
  ASSERT_EQ(defs.size(), 1u);
  EXPECT_EQ(defs[0].group, "General");
  EXPECT_EQ(defs[0].predicate.str(), ">=1");
  EXPECT_EQ(defs[0].polarity, Polarity::Presence);
  EXPECT_THROW(kpi_definitions_from_json(Json::parse(R"([{"name":"k","field":"G"}])"), schema), ValidationError);
  EXPECT_THROW(kpi_definitions_from_json(Json::parse(R"([{"field":"F"}])"), schema), ValidationError);
  EXPECT_THROW(kpi_definitions_from_json(Json::parse(R"([{"name":"k","field":"F","polarity":"maybe"}])"), schema),
               ValidationError);
}

// ---- sensor readiness ----

namespace {

SensorMapping two_field_mapping() {
  SensorMapping m;
  m[SensorCategory::TrafficMobility] = {"a", "b"};
  m[SensorCategory::RiskSafety] = {"c"};
  m[SensorCategory::EnvironmentalHealth] = {"d"};
  m[SensorCategory::EnergyManagement] = {"e"};
  m[SensorCategory::WasteCleanliness] = {"a", "e"};
  return m;
}

}  // namespace

TEST(Readiness, HandComputedScores) {
  auto r = rec("x", {{"a", 4}, {"b", 2}, {"c", 0}, {"d", std::nullopt}, {"e", 3}});
  auto s = readiness(r, two_field_mapping());
  EXPECT_DOUBLE_EQ(s[static_cast<std::size_t>(SensorCategory::TrafficMobility)], 75.0);
  EXPECT_DOUBLE_EQ(s[static_cast<std::size_t>(SensorCategory::RiskSafety)], 0.0);
  EXPECT_DOUBLE_EQ(s[static_cast<std::size_t>(SensorCategory::EnvironmentalHealth)], 0.0);
  EXPECT_DOUBLE_EQ(s[static_cast<std::size_t>(SensorCategory::EnergyManagement)], 75.0);
  EXPECT_DOUBLE_EQ(s[static_cast<std::size_t>(SensorCategory::WasteCleanliness)], 87.5);
}

TEST(Readiness, MappingValidation) {
  auto schema = schema_of({"a", "b", "c", "d", "e"});
  EXPECT_NO_THROW(validate(two_field_mapping(), schema));
  auto m = two_field_mapping();
  m.erase(SensorCategory::RiskSafety);
  EXPECT_THROW(validate(m, schema), ValidationError);
  m = two_field_mapping();
  m[SensorCategory::RiskSafety] = {"zz"};
  EXPECT_THROW(validate(m, schema), ValidationError);
  EXPECT_EQ(parse_sensor_category("Risk and Safety Monitoring"), SensorCategory::RiskSafety);
  EXPECT_THROW(parse_sensor_category("Noise"), ValidationError);
  EXPECT_EQ(kSensorCategories.size(), 5u);
}

TEST(Readiness, GapReportOrderingAndMeans) {
  Rng rng(31);
  std::vector<SurveyRecord> rs;
  for (int i = 0; i < 25; ++i) {
    std::map<std::string, std::optional<int>> r;
    for (const char* f : {"a", "b", "c", "d", "e"})
      r[f] = rng.below(6) == 0 ? std::nullopt : std::optional<int>(static_cast<int>(rng.below(5)));
    char id[8];
    std::snprintf(id, sizeof id, "o%02d", 24 - i);
    rs.push_back(rec(id, r));
  }
  auto rep = gap_report(rs, two_field_mapping());
  ASSERT_EQ(rep.per_org.size(), 25u);
  EXPECT_EQ(rep.per_org[0].first, "o24");
  ASSERT_EQ(rep.gaps.size(), 125u);
  for (std::size_t i = 1; i < rep.gaps.size(); ++i) {
    const auto& p = rep.gaps[i - 1];
    const auto& q = rep.gaps[i];
    EXPECT_TRUE(p.score < q.score || (p.score == q.score && (p.org_id < q.org_id ||
                                                             (p.org_id == q.org_id && p.category < q.category))));
  }
  for (auto c : kSensorCategories) {
    double s = 0.0;
    for (const auto& [_, scores] : rep.per_org) s += scores[static_cast<std::size_t>(c)];
    EXPECT_NEAR(rep.dataset_means[static_cast<std::size_t>(c)], s / 25.0, 1e-12);
  }
  for (const auto& [_, scores] : rep.per_org)
    for (double v : scores) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 100.0);
    }
  EXPECT_THROW(gap_report({}, two_field_mapping()), ValidationError);
}

TEST(Readiness, ExportsCarryCaveatAndRoundedScores) {
  std::vector<SurveyRecord> rs{rec("x", {{"a", 1}, {"b", 0}, {"c", 3}, {"d", 1}, {"e", 2}}),
                               rec("y", {{"a", 4}, {"b", 4}, {"c", 4}, {"d", 4}, {"e", 4}})};
  auto rep = gap_report(rs, two_field_mapping());
  auto j = to_json(rep);
  EXPECT_EQ(j["caveat"], std::string(kReadinessCaveat));
  EXPECT_EQ(j["categories"].size(), 5u);
  EXPECT_EQ(j["per_org"][0]["TrafficMobility"], 12.5);
  EXPECT_EQ(j["per_org"][0]["WasteCleanliness"], 37.5);
  EXPECT_EQ(j["dataset_means"]["TrafficMobility"], 56.25);
  EXPECT_EQ(j["gaps"][0]["org_id"], "x");
  auto back = readiness_from_json(j);
  EXPECT_EQ(back.per_org.size(), 2u);
  EXPECT_EQ(back.gaps.size(), 10u);
  EXPECT_EQ(format_readiness_csv(rep),
            "org_id,TrafficMobility,RiskSafety,EnvironmentalHealth,EnergyManagement,WasteCleanliness\n"
            "x,12.5,75.0,25.0,50.0,37.5\n"
            "y,100.0,100.0,100.0,100.0,100.0\n");
}

TEST(Readiness, BundledMappingOverFixture) {
  const auto& b = bundled();
  auto m = sensor_mapping_from_json(b.config.at("sensors"));
  EXPECT_NO_THROW(validate(m, b.schema));
  auto rep = gap_report(b.records, m);
  EXPECT_EQ(rep.gaps.size(), 5u * 79u);
}

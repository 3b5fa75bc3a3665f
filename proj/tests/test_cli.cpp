#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <string>

#include "dti/io.hpp"
#include "test_support.hpp"

using namespace dti;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

std::string quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

Outcome run_cli(const std::string& args, const test::TempDir& tmp) {
  const auto out = tmp.path() / "stdout.txt";
  const auto err = tmp.path() / "stderr.txt";
  const std::string cmd = quote(DTI_CLI_PATH) + " " + args + " >" + quote(out.string()) + " 2>" + quote(err.string());
  const int status = std::system(cmd.c_str());
  Outcome o{WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_file(out), read_file(err)};
  return o;
}

std::string bundled(const test::TempDir& tmp) {
  return "-c " + quote((test::data_dir() / "config.json").string()) + " --set " +
         quote("paths.output_dir=" + (tmp.path() / "out").string());
}

}  // namespace

TEST(Cli, VersionFlag) {
  test::TempDir tmp;
  auto o = run_cli("--version", tmp);
  EXPECT_EQ(o.code, 0);
  EXPECT_NE(o.out.find("dti 1.0.0"), std::string::npos);
}

TEST(Cli, UsageErrorsExitOne) {
  test::TempDir tmp;
  auto o = run_cli("", tmp);
  EXPECT_EQ(o.code, 1);
  EXPECT_EQ(o.err.rfind("error: kind=usage exit=1", 0), 0u) << o.err;
  o = run_cli("index", tmp);
  EXPECT_EQ(o.code, 1);
  o = run_cli("frobnicate -c x.json", tmp);
  EXPECT_EQ(o.code, 1);
}

TEST(Cli, IndexWritesTables) {
  test::TempDir tmp;
  auto o = run_cli("index " + bundled(tmp), tmp);
  ASSERT_EQ(o.code, 0) << o.err;
  const auto csv_text = read_file(tmp.path() / "out" / "dti.csv");
  EXPECT_EQ(csv_text.rfind("org_id,Communication Infrastructure,", 0), 0u);
  EXPECT_NE(csv_text.find(",dti\n"), std::string::npos);
  EXPECT_EQ(std::count(csv_text.begin(), csv_text.end(), '\n'), 80);
  auto j = read_json(tmp.path() / "out" / "dti.json");
  EXPECT_EQ(j["summary"]["count"], 79);
}

TEST(Cli, TooFewSamplesForFoldsIsValidationError) {
  test::TempDir tmp;
  auto o = run_cli("train-survey " + bundled(tmp) + " --set eval.k=100", tmp);
  EXPECT_EQ(o.code, 1);
  EXPECT_NE(o.err.find("kind=validation"), std::string::npos) << o.err;
  EXPECT_NE(o.err.find("n=79 < k=100"), std::string::npos) << o.err;
  EXPECT_NE(o.err.find("command=train-survey"), std::string::npos);
  EXPECT_EQ(std::count(o.err.begin(), o.err.end(), '\n'), 1);
}

TEST(Cli, MissingConfigIsIoError) {
  test::TempDir tmp;
  auto o = run_cli("index -c " + quote((tmp.path() / "nope.json").string()), tmp);
  EXPECT_EQ(o.code, 3);
  EXPECT_NE(o.err.find("kind=io"), std::string::npos) << o.err;
}

TEST(Cli, MalformedConfigIsValidationError) {
  test::TempDir tmp;
  write_file(tmp.path() / "bad.json", "{\"seed\": 1, \"paths\": ");
  auto o = run_cli("index -c " + quote((tmp.path() / "bad.json").string()), tmp);
  EXPECT_EQ(o.code, 1) << o.err;
  write_file(tmp.path() / "bad2.json", "{\"seed\": 1}");
  o = run_cli("index -c " + quote((tmp.path() / "bad2.json").string()), tmp);
  EXPECT_EQ(o.code, 1) << o.err;
}

TEST(Cli, PhaseOrderingEnforced) {
  test::TempDir tmp;
  auto o = run_cli("report " + bundled(tmp), tmp);
  EXPECT_EQ(o.code, 3);
  EXPECT_NE(o.err.find("first"), std::string::npos) << o.err;
}

TEST(Cli, KpiReadinessReportChain) {
  test::TempDir tmp;
  for (const char* step : {"index", "kpis", "readiness", "report"}) {
    auto o = run_cli(std::string(step) + " " + bundled(tmp), tmp);
    ASSERT_EQ(o.code, 0) << step << ": " << o.err;
  }
  const auto out = tmp.path() / "out";
  EXPECT_TRUE(std::filesystem::exists(out / "report" / "index.html"));
  auto kpis = read_json(out / "kpis.json");
  ASSERT_TRUE(kpis.is_array());
  EXPECT_EQ(kpis[0]["percentage"], 79.7);
  EXPECT_NE(read_file(out / "kpis.csv").find(",63,79,79.7,"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(out / "readiness.csv"));
}

TEST(Cli, QuickSurveyTrainingProducesArtifacts) {
  test::TempDir tmp;
  const std::string quick = " --set train.epochs=5 --set eval.k=3";
  auto o = run_cli("train-survey " + bundled(tmp) + quick, tmp);
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_NE(o.out.find("fold"), std::string::npos);
  const auto out = tmp.path() / "out";
  auto eval = read_json(out / "models" / "survey_eval.json");
  EXPECT_EQ(eval["folds"].size(), 3u);
  EXPECT_TRUE(std::filesystem::exists(out / "models" / "survey_model.json"));
  o = run_cli("evaluate " + bundled(tmp) + quick, tmp);
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_TRUE(std::filesystem::exists(out / "predictions" / "survey_predictions.csv"));
}

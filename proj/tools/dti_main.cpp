#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dti/dti.hpp"

namespace {

std::string one_line(std::string s) {
  for (auto& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  std::string quoted;
  for (char c : s) {
    if (c == '"' || c == '\\') quoted.push_back('\\');
    quoted.push_back(c);
  }
  return quoted;
}

int fail(const char* kind, int code, const std::string& subcommand, const std::string& message) {
  std::cerr << "error: kind=" << kind << " exit=" << code << " command=" << (subcommand.empty() ? "-" : subcommand)
            << " message=\"" << one_line(message) << "\"\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  using Step = std::function<void(const dti::PipelineConfig&, const dti::Console&)>;
  const std::vector<std::pair<std::string, std::pair<Step, std::string>>> commands = {
      {"ingest", {dti::run_ingest, "Validate and normalize the survey file"}},
      {"index", {dti::run_index, "Compute dimension scores and the DTI table"}},
      {"crawl", {dti::run_crawl, "Crawl configured sites into raw page records"}},
      {"clean", {dti::run_clean, "Extract, clean, anonymize and label page text"}},
      {"featurize", {dti::run_featurize, "Fit the hashed TF-IDF vectorizer on the corpus"}},
      {"train-survey", {dti::run_train_survey, "Evaluate and fit the survey-vector regressor"}},
      {"train-text", {dti::run_train_text, "Evaluate and fit the text-vector regressor"}},
      {"evaluate", {dti::run_evaluate, "Write predictions and metrics for the fitted models"}},
      {"kpis", {dti::run_kpis, "Compute the configured KPI suite"}},
      {"readiness", {dti::run_readiness, "Score sensor-category readiness and gaps"}},
      {"report", {dti::run_report, "Render the static HTML report"}},
      {"run-all", {dti::run_all, "Run every phase in order"}},
  };

  CLI::App app{"Digital Transformation Index toolkit", "dti"};
  app.set_version_flag("--version", std::string("dti ") + dti::kVersion);
  app.require_subcommand(1, 1);
  std::string config_path;
  std::vector<std::string> overrides;
  std::string chosen;
  for (const auto& [name, entry] : commands) {
    auto* sub = app.add_subcommand(name, entry.second);
    sub->add_option("-c,--config", config_path, "Pipeline configuration (JSON)")->required();
    sub->add_option("--set", overrides, "Override a config value, e.g. --set train.epochs=200");
    sub->callback([&chosen, n = name] { chosen = n; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", 1, chosen, e.what());
  }

  try {
    const dti::PipelineConfig cfg = dti::load_config(config_path, overrides);
    const dti::Console console{std::cout, std::cerr};
    for (const auto& [name, entry] : commands)
      if (name == chosen) entry.first(cfg, console);
    return 0;
  } catch (const dti::Error& e) {
    return fail(e.kind(), e.exit_code(), chosen, e.what());
  } catch (const std::exception& e) {
    return fail("runtime", 2, chosen, e.what());
  }
}

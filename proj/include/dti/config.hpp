#pragma once

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dti/corpus.hpp"
#include "dti/crawler.hpp"
#include "dti/dti_engine.hpp"
#include "dti/error.hpp"
#include "dti/io.hpp"
#include "dti/kpi.hpp"
#include "dti/mlp.hpp"
#include "dti/readiness.hpp"
#include "dti/survey.hpp"

namespace dti {

/// Applies one `--set a.b.c=value` override. The value is parsed as JSON when it
/// parses, otherwise taken as a string; intermediate objects are created on demand.
inline void apply_override(Json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw ValidationError("override '" + std::string(assignment) + "' must look like key.path=value");
  const std::string key(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  Json value = Json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  Json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ValidationError("override key '" + key + "' has an empty component");
    if (!node->is_object()) {
      if (!node->is_null()) throw ValidationError("override key '" + key + "' descends into a non-object");
      *node = Json::object();
    }
    if (dot == std::string::npos) {
      (*node)[part] = std::move(value);
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

struct PipelinePaths {
  std::filesystem::path schema;
  std::filesystem::path surveys;
  std::filesystem::path output_dir;
  std::filesystem::path corpus_dir;  // defaults to <output_dir>/corpus
  std::optional<std::filesystem::path> sites;
  std::optional<std::filesystem::path> gazetteer;
  std::optional<std::filesystem::path> stopwords;
  std::optional<std::filesystem::path> fixture_dir;
  std::optional<std::filesystem::path> labels;  // external DTI table; defaults to the index output
};

struct FeatureSettings {
  std::size_t dim = 4096;
  std::uint64_t hash_seed = 0;
  std::size_t max_chars = 0;  // 0 = full text
};

struct ModelSettings {
  std::vector<std::size_t> hidden{128, 64, 32};
  TrainConfig train;
};

struct EvalSettings {
  std::string protocol = "kfold";  // kfold | holdout
  std::size_t k = 10;
  double test_fraction = 0.25;
  unsigned threads = 1;
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  PipelinePaths paths;
  MissingPolicy missing_policy = MissingPolicy::Zero;
  WeightConfig weights;
  DimensionMapping mapping;
  CrawlPolicy crawl;
  unsigned crawl_workers = 1;
  bool offline = false;  // serve pages from paths.fixture_dir on a simulated clock
  FeatureSettings features;
  ModelSettings survey_model;
  ModelSettings text_model;
  EvalSettings eval;
  std::vector<KpiDefinition> kpis;
  KpiMissing kpi_missing = KpiMissing::Exclude;
  std::optional<SensorMapping> sensors;
  SurveySchema schema;  // loaded during validation
};

namespace config_detail {

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return (path.is_absolute() ? path : base / path).lexically_normal();
}

inline std::filesystem::path require_path(const Json& paths, const char* key, const std::filesystem::path& base) {
  if (!paths.contains(key) || !paths[key].is_string() || paths[key].get<std::string>().empty())
    throw ValidationError(std::string("config: paths.") + key + " is required");
  return resolve(base, paths[key].get<std::string>());
}

inline std::optional<std::filesystem::path> optional_path(const Json& paths, const char* key,
                                                          const std::filesystem::path& base) {
  if (!paths.contains(key) || paths[key].is_null()) return std::nullopt;
  if (!paths[key].is_string()) throw ValidationError(std::string("config: paths.") + key + " must be a string");
  return resolve(base, paths[key].get<std::string>());
}

inline void require_exists(const std::filesystem::path& p, const char* what) {
  std::error_code ec;
  if (!std::filesystem::exists(p, ec)) throw IoError(std::string("config: ") + what + " '" + p.string() + "' does not exist");
}

inline ModelSettings model_settings(const Json& j, std::uint64_t seed, const ModelSettings& base) {
  ModelSettings m = base;
  m.train.seed = seed;
  if (j.is_null()) return m;
  if (j.contains("hidden")) m.hidden = j["hidden"].get<std::vector<std::size_t>>();
  for (auto h : m.hidden)
    if (h == 0) throw ValidationError("config: hidden layer sizes must be positive");
  m.train = train_config_from_json(j, m.train);
  return m;
}

}  // namespace config_detail

/// Builds a validated configuration. Relative paths resolve against `base_dir`.
/// `DTI_OFFLINE=1` in the environment forces fixture-served crawling.
inline PipelineConfig config_from_json(const Json& j, const std::filesystem::path& base_dir) {
  using namespace config_detail;
  PipelineConfig c;
  try {
    if (!j.is_object()) throw ValidationError("config: top level must be an object");
    if (!j.contains("seed") || !j["seed"].is_number_integer())
      throw ValidationError("config: an integer 'seed' is required");
    c.seed = j["seed"].get<std::uint64_t>();

    const Json& paths = j.at("paths");
    c.paths.schema = require_path(paths, "schema", base_dir);
    c.paths.surveys = require_path(paths, "surveys", base_dir);
    c.paths.output_dir = require_path(paths, "output_dir", base_dir);
    auto corpus = optional_path(paths, "corpus_dir", base_dir);
    c.paths.corpus_dir = corpus ? *corpus : c.paths.output_dir / "corpus";
    c.paths.sites = optional_path(paths, "sites", base_dir);
    c.paths.gazetteer = optional_path(paths, "gazetteer", base_dir);
    c.paths.stopwords = optional_path(paths, "stopwords", base_dir);
    c.paths.fixture_dir = optional_path(paths, "fixture_dir", base_dir);
    c.paths.labels = optional_path(paths, "labels", base_dir);

    const Json ingest = j.value("ingest", Json::object());
    c.missing_policy = parse_missing_policy(ingest.value("missing_policy", std::string("zero")));

    const Json dti = j.value("dti", Json::object());
    c.weights = dti.contains("weights") ? weights_from_json(dti["weights"]) : default_weights();
    if (!dti.contains("mapping")) throw ValidationError("config: dti.mapping is required");
    c.mapping = mapping_from_json(dti["mapping"]);

    const Json crawl = j.value("crawl", Json::object());
    c.crawl.max_depth = crawl.value("max_depth", c.crawl.max_depth);
    c.crawl.max_pages = crawl.value("max_pages", c.crawl.max_pages);
    c.crawl.per_host_delay = crawl.value("per_host_delay", c.crawl.per_host_delay);
    c.crawl.respect_robots = crawl.value("respect_robots", c.crawl.respect_robots);
    c.crawl.user_agent = crawl.value("user_agent", c.crawl.user_agent);
    c.crawl.timeout = crawl.value("timeout", c.crawl.timeout);
    c.crawl_workers = crawl.value("workers", 1u);
    c.offline = crawl.value("offline", false);
    if (c.crawl.max_depth < 0) throw ValidationError("config: crawl.max_depth must be >= 0");
    if (c.crawl.max_pages < 1) throw ValidationError("config: crawl.max_pages must be >= 1");
    if (!(c.crawl.per_host_delay >= 0.0)) throw ValidationError("config: crawl.per_host_delay must be >= 0");

    const Json features = j.value("features", Json::object());
    c.features.dim = features.value("dim", c.features.dim);
    c.features.hash_seed = features.value("hash_seed", c.seed);
    c.features.max_chars = features.value("max_chars", c.features.max_chars);
    if (c.features.dim == 0 || (c.features.dim & (c.features.dim - 1)) != 0)
      throw ValidationError("config: features.dim must be a power of two");

    c.survey_model = model_settings(j.value("train", Json()), c.seed, {});
    c.text_model = model_settings(j.value("text_train", Json()), c.seed, c.survey_model);

    const Json eval = j.value("eval", Json::object());
    c.eval.protocol = eval.value("protocol", c.eval.protocol);
    c.eval.k = eval.value("k", c.eval.k);
    c.eval.test_fraction = eval.value("test_fraction", c.eval.test_fraction);
    c.eval.threads = eval.value("threads", c.eval.threads);
    if (c.eval.protocol != "kfold" && c.eval.protocol != "holdout")
      throw ValidationError("config: eval.protocol must be 'kfold' or 'holdout', got '" + c.eval.protocol + "'");

    const Json kpis = j.value("kpis", Json::object());
    const std::string kpi_missing = kpis.value("missing", std::string("exclude"));
    if (kpi_missing == "exclude") c.kpi_missing = KpiMissing::Exclude;
    else if (kpi_missing == "zero") c.kpi_missing = KpiMissing::CountAsZero;
    else throw ValidationError("config: kpis.missing must be 'exclude' or 'zero'");

    if (j.contains("sensors") && !j["sensors"].is_null()) c.sensors = sensor_mapping_from_json(j["sensors"]);

    // Files referenced by the config must exist now.
    require_exists(c.paths.schema, "schema file");
    require_exists(c.paths.surveys, "survey file");
    if (c.paths.sites) require_exists(*c.paths.sites, "site list");
    if (c.paths.gazetteer) require_exists(*c.paths.gazetteer, "gazetteer");
    if (c.paths.stopwords) require_exists(*c.paths.stopwords, "stopword list");
    if (c.paths.labels) require_exists(*c.paths.labels, "label table");
    if (c.paths.fixture_dir) require_exists(*c.paths.fixture_dir, "fixture directory");

    const char* env = std::getenv("DTI_OFFLINE");
    if (env && std::string_view(env) == "1") c.offline = true;
    if (c.offline && !c.paths.fixture_dir)
      throw ValidationError("config: offline crawling requires paths.fixture_dir");

    c.schema = load_schema(c.paths.schema);
    validate(c.weights);
    validate(c.mapping, c.schema, c.weights);
    c.kpis = kpi_definitions_from_json(kpis.value("definitions", Json::array()), c.schema);
    if (c.sensors) validate(*c.sensors, c.schema);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  return c;
}

/// Reads a config file, applies overrides in order, and validates.
inline PipelineConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {}) {
  Json j = read_json(path);
  for (const auto& o : overrides) apply_override(j, o);
  const auto base = std::filesystem::absolute(path).parent_path();
  return config_from_json(j, base);
}

}  // namespace dti

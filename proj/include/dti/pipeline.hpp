#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dti/config.hpp"
#include "dti/corpus.hpp"
#include "dti/crawler.hpp"
#include "dti/dti_engine.hpp"
#include "dti/eval.hpp"
#include "dti/io.hpp"
#include "dti/kpi.hpp"
#include "dti/mlp.hpp"
#include "dti/readiness.hpp"
#include "dti/report.hpp"
#include "dti/survey.hpp"
#include "dti/text_features.hpp"

namespace dti {

/// Output locations, all under the configured output directory.
struct Artifacts {
  std::filesystem::path root;
  std::filesystem::path corpus;

  std::filesystem::path normalized_surveys() const { return root / "surveys.normalized.csv"; }
  std::filesystem::path ingest_summary() const { return root / "ingest_summary.json"; }
  std::filesystem::path dti_csv() const { return root / "dti.csv"; }
  std::filesystem::path dti_json() const { return root / "dti.json"; }
  std::filesystem::path crawl_dir() const { return root / "crawl"; }
  std::filesystem::path fetch_log() const { return crawl_dir() / "fetch_log.csv"; }
  std::filesystem::path vectorizer() const { return root / "features" / "vectorizer.json"; }
  std::filesystem::path fit_report() const { return root / "features" / "fit_report.json"; }
  std::filesystem::path eval_report(const std::string& source) const { return root / "models" / (source + "_eval.json"); }
  std::filesystem::path model(const std::string& source) const { return root / "models" / (source + "_model.json"); }
  std::filesystem::path predictions(const std::string& source) const {
    return root / "predictions" / (source + "_predictions.csv");
  }
  std::filesystem::path evaluation() const { return root / "evaluation.json"; }
  std::filesystem::path kpis_json() const { return root / "kpis.json"; }
  std::filesystem::path kpis_csv() const { return root / "kpis.csv"; }
  std::filesystem::path readiness_json() const { return root / "readiness.json"; }
  std::filesystem::path readiness_csv() const { return root / "readiness.csv"; }
  std::filesystem::path report_dir() const { return root / "report"; }
};

inline Artifacts artifacts(const PipelineConfig& cfg) { return {cfg.paths.output_dir, cfg.paths.corpus_dir}; }

/// Sink for progress lines (stdout) and warnings (stderr).
struct Console {
  std::ostream& out;
  std::ostream& err;
  void info(const std::string& s) const { out << s << '\n'; }
  void warn(const std::string& s) const { err << "warning: " << s << '\n'; }
};

namespace pipeline_detail {

inline void require_artifact(const std::filesystem::path& p, const char* producer) {
  std::error_code ec;
  if (!std::filesystem::exists(p, ec))
    throw IoError("missing input '" + p.string() + "'; run 'dti " + producer + "' first");
}

inline std::vector<SurveyRecord> surveys(const PipelineConfig& cfg) { return load_surveys(cfg.paths.surveys, cfg.schema); }

/// External label table when configured, otherwise the index computed from the surveys.
inline std::map<std::string, double> labels(const PipelineConfig& cfg, const std::vector<SurveyRecord>& records) {
  if (cfg.paths.labels) return parse_dti_labels(read_file(*cfg.paths.labels), cfg.paths.labels->string());
  std::map<std::string, double> out;
  for (const auto& r : records) out[r.org_id] = compute_dti_unchecked(r, cfg.mapping, cfg.weights).value;
  return out;
}

inline std::vector<std::size_t> layer_sizes(std::size_t input, const ModelSettings& m) {
  std::vector<std::size_t> sizes{input};
  sizes.insert(sizes.end(), m.hidden.begin(), m.hidden.end());
  sizes.push_back(1);
  return sizes;
}

struct Labeled {
  std::vector<std::string> ids;
  std::vector<Sample> samples;
};

/// Cross-validates (or holds out), then fits a final model on every sample.
inline void train_and_evaluate(const PipelineConfig& cfg, const ModelSettings& settings, const Labeled& data,
                               const std::string& source, const Console& console) {
  if (data.samples.empty()) throw DataError("no labeled " + source + " samples to train on");
  const auto a = artifacts(cfg);
  const auto sizes = layer_sizes(data.samples.front().x.size(), settings);
  const std::uint64_t stream = source == "survey" ? 1000 : 2000;
  ModelFactory factory = [&](std::size_t fold) {
    return MlpModel::he_uniform(sizes, mix_seed(cfg.seed, stream + 1 + fold));
  };
  EvalReport report;
  if (cfg.eval.protocol == "kfold") {
    FoldPlan plan = make_folds(data.samples.size(), cfg.eval.k, mix_seed(cfg.seed, stream));
    report = cross_validate(data.samples, factory, settings.train, plan, cfg.eval.threads);
  } else {
    report = holdout_evaluate(data.samples, factory, settings.train, cfg.eval.test_fraction, mix_seed(cfg.seed, stream));
  }
  Json ej = to_json(report);
  ej["source"] = source;
  ej["samples"] = data.samples.size();
  ej["layer_sizes"] = sizes;
  write_json(a.eval_report(source), ej);
  console.info(format_table(report, source + " regressor"));

  TrainResult final_fit = train(MlpModel::he_uniform(sizes, mix_seed(cfg.seed, stream)), data.samples, settings.train);
  Json mj = to_json(final_fit.model, &settings.train);
  mj["final_train_mse"] = final_fit.loss_trace.back();
  write_json(a.model(source), mj);
  console.info(source + " model: " + std::to_string(final_fit.model.parameter_count()) + " parameters, final train MSE " +
               number_text(round_half_up(final_fit.loss_trace.back(), 4)) + " -> " + a.model(source).string());
}

inline Labeled survey_samples(const PipelineConfig& cfg) {
  const auto records = surveys(cfg);
  const auto y = labels(cfg, records);
  Labeled out;
  for (const auto& r : records) {
    auto it = y.find(r.org_id);
    if (it == y.end()) continue;
    out.ids.push_back(r.org_id);
    out.samples.push_back({to_feature_vector(r, cfg.schema, cfg.missing_policy), it->second});
  }
  return out;
}

inline Labeled text_samples(const PipelineConfig& cfg, const Console& console) {
  const auto a = artifacts(cfg);
  require_artifact(a.vectorizer(), "featurize");
  require_artifact(a.corpus / "manifest.json", "clean");
  const Vectorizer v = Vectorizer::from_json(read_json(a.vectorizer()));
  Labeled out;
  std::size_t skipped = 0;
  for (const auto& d : read_corpus(a.corpus)) {
    if (!d.dti_label || d.text.empty()) {
      ++skipped;
      continue;
    }
    out.ids.push_back(d.org_id);
    out.samples.push_back({v.transform(d.text), *d.dti_label});
  }
  if (skipped) console.warn(std::to_string(skipped) + " corpus documents skipped (no label or empty text)");
  return out;
}

inline std::string predictions_csv(const Labeled& data, const MlpModel& model, double& mae_out, double& rmse_out) {
  std::string s = csv::format_row({"org_id", "target", "prediction", "abs_error"});
  std::vector<double> preds, targets;
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    const double p = clamp_prediction(predict(model, data.samples[i].x));
    preds.push_back(p);
    targets.push_back(data.samples[i].y);
    s += csv::format_row({data.ids[i], number_text(round_half_up(data.samples[i].y, 4)), number_text(round_half_up(p, 4)),
                          number_text(round_half_up(std::abs(p - data.samples[i].y), 4))});
  }
  mae_out = mae(preds, targets);
  rmse_out = rmse(preds, targets);
  return s;
}

}  // namespace pipeline_detail

// ---- subcommands ----

inline void run_ingest(const PipelineConfig& cfg, const Console& console) {
  const auto a = artifacts(cfg);
  const auto records = pipeline_detail::surveys(cfg);
  write_file(a.normalized_surveys(), format_surveys(records, cfg.schema));
  Json summary;
  summary["records"] = records.size();
  summary["fields"] = cfg.schema.size();
  std::size_t missing = 0;
  Json per_field = Json::object();
  for (const auto& f : cfg.schema.field_names) {
    std::size_t m = 0;
    for (const auto& r : records)
      if (!r.response(f)) ++m;
    if (m) per_field[f] = m;
    missing += m;
  }
  summary["missing_cells"] = missing;
  summary["missing_by_field"] = std::move(per_field);
  std::map<std::string, std::size_t> strata;
  for (const auto& r : records) strata[r.population_stratum ? std::string(to_string(*r.population_stratum)) : "unknown"]++;
  summary["population_strata"] = strata;
  write_json(a.ingest_summary(), summary);
  console.info("ingest: " + std::to_string(records.size()) + " records, " + std::to_string(cfg.schema.size()) +
               " fields, " + std::to_string(missing) + " missing cells -> " + a.normalized_surveys().string());
}

inline void run_index(const PipelineConfig& cfg, const Console& console) {
  const auto a = artifacts(cfg);
  std::vector<DtiRow> rows;
  for (const auto& r : pipeline_detail::surveys(cfg)) {
    DtiRow row{r.org_id, compute_dti(r, cfg.mapping, cfg.weights, cfg.schema)};
    for (const auto& dim : row.score.uncovered_dimensions)
      console.warn(r.org_id + ": dimension '" + dim + "' has no answered fields; scored 0");
    rows.push_back(std::move(row));
  }
  write_file(a.dti_csv(), format_dti_csv(rows, cfg.weights));
  write_json(a.dti_json(), dti_table_to_json(rows, cfg.weights));
  console.info("index: " + std::to_string(rows.size()) + " organizations -> " + a.dti_csv().string());
}

inline void run_crawl(const PipelineConfig& cfg, const Console& console) {
  if (!cfg.paths.sites) throw ValidationError("config: paths.sites is required for crawling");
  const auto a = artifacts(cfg);
  const auto sites = parse_sites(read_file(*cfg.paths.sites), cfg.paths.sites->string());
  std::unique_ptr<Fetcher> fetcher;
  std::unique_ptr<Clock> clock;
  unsigned workers = cfg.crawl_workers;
  if (cfg.offline) {
    fetcher = std::make_unique<FixtureFetcher>(*cfg.paths.fixture_dir);
    clock = std::make_unique<VirtualClock>();
    workers = 1;  // a shared simulated clock is only reproducible when sites run in order
  } else {
    fetcher = std::make_unique<HttpFetcher>();
    clock = std::make_unique<SteadyClock>();
  }
  const auto crawls = crawl_sites(sites, cfg.crawl, *fetcher, *clock, workers);
  Json manifest;
  manifest["mode"] = cfg.offline ? "offline" : "live";
  manifest["sites"] = Json::array();
  std::vector<FetchLogEntry> log;
  std::size_t pages = 0;
  for (const auto& sc : crawls) {
    const std::string file = file_stem(sc.org_id) + ".json";
    write_json(a.crawl_dir() / file, to_json(sc));
    manifest["sites"].push_back(Json{{"org_id", sc.org_id}, {"file", file}, {"pages", sc.pages.size()}});
    log.insert(log.end(), sc.log.begin(), sc.log.end());
    pages += sc.pages.size();
    for (const auto& w : sc.warnings) console.warn(sc.org_id + ": " + w);
  }
  write_json(a.crawl_dir() / "manifest.json", manifest);
  write_file(a.fetch_log(), format_fetch_log(log));
  console.info("crawl: " + std::to_string(sites.size()) + " sites, " + std::to_string(pages) + " pages -> " +
               a.crawl_dir().string());
}

inline void run_clean(const PipelineConfig& cfg, const Console& console) {
  const auto a = artifacts(cfg);
  pipeline_detail::require_artifact(a.crawl_dir() / "manifest.json", "crawl");
  Gazetteer gazetteer;
  if (cfg.paths.gazetteer) gazetteer = parse_gazetteer(read_file(*cfg.paths.gazetteer), cfg.paths.gazetteer->string());
  const auto terms = gazetteer.normalized_terms();
  const auto records = pipeline_detail::surveys(cfg);
  const auto labels = pipeline_detail::labels(cfg, records);
  std::map<std::string, const SurveyRecord*> by_id;
  for (const auto& r : records) by_id[r.org_id] = &r;

  std::vector<CorpusDocument> docs;
  const Json manifest = read_json(a.crawl_dir() / "manifest.json");
  for (const auto& entry : manifest.at("sites")) {
    const SiteCrawl sc = site_crawl_from_json(read_json(a.crawl_dir() / entry.at("file").get<std::string>()));
    auto label = labels.find(sc.org_id);
    auto rec = by_id.find(sc.org_id);
    docs.push_back(assemble_document(
        sc, terms, label == labels.end() ? std::nullopt : std::optional(round_half_up(label->second, 2)),
        rec == by_id.end() ? std::nullopt : std::optional(survey_to_json(*rec->second, cfg.schema))));
    if (sc.pages.empty()) console.warn(sc.org_id + ": no pages fetched; document text is empty");
  }
  write_corpus(a.corpus, docs);
  console.info("clean: " + std::to_string(docs.size()) + " documents -> " + a.corpus.string());
}

inline void run_featurize(const PipelineConfig& cfg, const Console& console) {
  const auto a = artifacts(cfg);
  pipeline_detail::require_artifact(a.corpus / "manifest.json", "clean");
  std::vector<std::string> texts;
  for (auto& d : read_corpus(a.corpus)) texts.push_back(std::move(d.text));
  std::set<std::string, std::less<>> stopwords;
  if (cfg.paths.stopwords) stopwords = parse_stopwords(read_file(*cfg.paths.stopwords));
  Vectorizer::FitReport report;
  const Vectorizer v =
      Vectorizer::fit(texts, cfg.features.dim, std::move(stopwords), cfg.features.hash_seed, &report, cfg.features.max_chars);
  write_json(a.vectorizer(), v.to_json());
  write_json(a.fit_report(), to_json(report));
  console.info("featurize: " + std::to_string(report.documents) + " documents, " + std::to_string(report.vocabulary) +
               " distinct tokens in " + std::to_string(report.occupied_buckets) + "/" + std::to_string(v.dim()) +
               " buckets -> " + a.vectorizer().string());
}

inline void run_train_survey(const PipelineConfig& cfg, const Console& console) {
  pipeline_detail::train_and_evaluate(cfg, cfg.survey_model, pipeline_detail::survey_samples(cfg), "survey", console);
}

inline void run_train_text(const PipelineConfig& cfg, const Console& console) {
  pipeline_detail::train_and_evaluate(cfg, cfg.text_model, pipeline_detail::text_samples(cfg, console), "text",
                                      console);
}

/// In-sample predictions from the persisted final models, next to their held-out metrics.
inline void run_evaluate(const PipelineConfig& cfg, const Console& console) {
  const auto a = artifacts(cfg);
  pipeline_detail::require_artifact(a.model("survey"), "train-survey");
  Json out;
  auto evaluate = [&](const std::string& source, const pipeline_detail::Labeled& data) {
    const MlpModel model = model_from_json(read_json(a.model(source)));
    double m = 0.0, r = 0.0;
    write_file(a.predictions(source), pipeline_detail::predictions_csv(data, model, m, r));
    Json e;
    e["held_out"] = read_json(a.eval_report(source)).at("aggregate");
    e["in_sample"] = Json{{"samples", data.samples.size()}, {"mae", m}, {"rmse", r}};
    out[source] = std::move(e);
    console.info("evaluate " + source + ": in-sample MAE " + number_text(round_half_up(m, 3)) + ", RMSE " +
                 number_text(round_half_up(r, 3)));
  };
  evaluate("survey", pipeline_detail::survey_samples(cfg));
  std::error_code ec;
  if (std::filesystem::exists(a.model("text"), ec)) evaluate("text", pipeline_detail::text_samples(cfg, console));
  write_json(a.evaluation(), out);
}

inline void run_kpis(const PipelineConfig& cfg, const Console& console) {
  const auto a = artifacts(cfg);
  const auto kpis = kpi_suite(pipeline_detail::surveys(cfg), cfg.kpis, cfg.schema, cfg.kpi_missing);
  Json j = Json::array();
  for (const auto& k : kpis) j.push_back(to_json(k));
  write_json(a.kpis_json(), j);
  write_file(a.kpis_csv(), format_kpi_csv(kpis));
  console.info("kpis: " + std::to_string(kpis.size()) + " indicators -> " + a.kpis_json().string());
}

inline void run_readiness(const PipelineConfig& cfg, const Console& console) {
  if (!cfg.sensors) throw ValidationError("config: a 'sensors' mapping is required for readiness scoring");
  const auto a = artifacts(cfg);
  const auto report = gap_report(pipeline_detail::surveys(cfg), *cfg.sensors, cfg.schema.max_value);
  write_json(a.readiness_json(), to_json(report));
  write_file(a.readiness_csv(), format_readiness_csv(report));
  console.info("readiness: " + std::to_string(report.per_org.size()) + " organizations -> " +
               a.readiness_json().string());
}

inline void run_report(const PipelineConfig& cfg, const Console& console) {
  const auto a = artifacts(cfg);
  pipeline_detail::require_artifact(a.kpis_json(), "kpis");
  pipeline_detail::require_artifact(a.dti_json(), "index");
  std::vector<KpiRecord> kpis;
  for (const auto& k : read_json(a.kpis_json())) kpis.push_back(kpi_from_json(k));
  std::optional<ReadinessReport> readiness;
  std::error_code ec;
  if (std::filesystem::exists(a.readiness_json(), ec)) readiness = readiness_from_json(read_json(a.readiness_json()));
  const auto path = render_report(kpis, read_json(a.dti_json()), readiness, a.report_dir());
  console.info("report: " + path.string());
}

/// Every phase in order; the first failure propagates. Crawling and text stages run
/// only when a site list is configured, readiness only with a sensor mapping.
inline void run_all(const PipelineConfig& cfg, const Console& console) {
  run_ingest(cfg, console);
  run_index(cfg, console);
  if (cfg.paths.sites) {
    run_crawl(cfg, console);
    run_clean(cfg, console);
    run_featurize(cfg, console);
  }
  run_train_survey(cfg, console);
  if (cfg.paths.sites) run_train_text(cfg, console);
  run_evaluate(cfg, console);
  run_kpis(cfg, console);
  if (cfg.sensors) run_readiness(cfg, console);
  run_report(cfg, console);
}

}  // namespace dti

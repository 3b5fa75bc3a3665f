#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <future>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dti/error.hpp"
#include "dti/io.hpp"
#include "dti/mlp.hpp"
#include "dti/rng.hpp"

namespace dti {

/// Assignment of sample indices to k folds.
struct FoldPlan {
  std::size_t k = 10;
  std::uint64_t seed = 0;
  std::vector<std::size_t> assignments;  // sample index -> fold index

  std::size_t size() const noexcept { return assignments.size(); }

  std::vector<std::size_t> test_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
      if (assignments[i] == fold) out.push_back(i);
    return out;
  }

  std::vector<std::size_t> train_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
      if (assignments[i] != fold) out.push_back(i);
    return out;
  }

  std::vector<std::size_t> fold_sizes() const {
    std::vector<std::size_t> sizes(k, 0);
    for (auto f : assignments) ++sizes[f];
    return sizes;
  }
};

/// Seeded shuffle, then round-robin: fold sizes differ by at most one.
inline FoldPlan make_folds(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ValidationError("k-fold cross-validation needs k >= 2, got k=" + std::to_string(k));
  if (n < k)
    throw ValidationError("k-fold cross-validation needs at least k samples: n=" + std::to_string(n) +
                          " < k=" + std::to_string(k));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.assignments.resize(n);
  for (std::size_t pos = 0; pos < n; ++pos) plan.assignments[order[pos]] = pos % k;
  return plan;
}

struct HoldoutSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Seeded shuffle; the first round(n * test_fraction) indices form the test set.
inline HoldoutSplit holdout_split(std::size_t n, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ValidationError("test fraction must lie strictly between 0 and 1");
  const auto test_size = static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
  if (test_size == 0 || test_size >= n)
    throw ValidationError("holdout of " + number_text(test_fraction) + " on n=" + std::to_string(n) +
                          " leaves an empty train or test set");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  HoldoutSplit s;
  s.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(test_size));
  s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(test_size), order.end());
  std::sort(s.test.begin(), s.test.end());
  std::sort(s.train.begin(), s.train.end());
  return s;
}

struct FoldResult {
  std::size_t fold = 0;
  bool completed = false;
  std::string failure;  // set when !completed
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  double train_mae = 0.0;
  double test_mae = 0.0;
  double train_rmse = 0.0;
  double test_rmse = 0.0;
};

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 with fewer than two folds
};

struct EvalReport {
  std::string protocol;  // e.g. "kfold k=10 seed=7"
  std::vector<FoldResult> per_fold;
  bool complete = true;
  std::size_t completed_folds = 0;
  MetricSummary train_mae, test_mae, train_rmse, test_rmse;
  Json config;
};

/// Builds a fresh, initialized model for a fold.
using ModelFactory = std::function<MlpModel(std::size_t fold)>;

namespace eval_detail {

inline MetricSummary summarize(const std::vector<FoldResult>& folds, double FoldResult::*field) {
  MetricSummary s;
  std::size_t n = 0;
  for (const auto& f : folds)
    if (f.completed) {
      s.mean += f.*field;
      ++n;
    }
  if (n == 0) return s;
  s.mean /= static_cast<double>(n);
  if (n > 1) {
    double ss = 0.0;
    for (const auto& f : folds)
      if (f.completed) ss += (f.*field - s.mean) * (f.*field - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(n - 1));
  }
  return s;
}

inline FoldResult run_split(std::span<const Sample> data, const std::vector<std::size_t>& train_idx,
                            const std::vector<std::size_t>& test_idx, MlpModel model, const TrainConfig& cfg,
                            std::size_t fold) {
  FoldResult r;
  r.fold = fold;
  r.train_size = train_idx.size();
  r.test_size = test_idx.size();
  std::vector<Sample> train_set;
  train_set.reserve(train_idx.size());
  for (auto i : train_idx) train_set.push_back(data[i]);
  try {
    TrainResult tr = train(std::move(model), train_set, cfg);
    auto score = [&](const std::vector<std::size_t>& idx, double& out_mae, double& out_rmse) {
      std::vector<double> p, t;
      for (auto i : idx) {
        p.push_back(predict(tr.model, data[i].x));
        t.push_back(data[i].y);
      }
      out_mae = mae(p, t);
      out_rmse = rmse(p, t);
    };
    score(train_idx, r.train_mae, r.train_rmse);
    score(test_idx, r.test_mae, r.test_rmse);
    r.completed = std::isfinite(r.test_mae) && std::isfinite(r.train_mae);
    if (!r.completed) r.failure = "non-finite predictions";
  } catch (const TrainingDiverged& e) {
    r.failure = e.what();
  }
  return r;
}

inline void finalize(EvalReport& report) {
  report.completed_folds = static_cast<std::size_t>(
      std::count_if(report.per_fold.begin(), report.per_fold.end(), [](const auto& f) { return f.completed; }));
  report.complete = report.completed_folds == report.per_fold.size();
  report.train_mae = summarize(report.per_fold, &FoldResult::train_mae);
  report.test_mae = summarize(report.per_fold, &FoldResult::test_mae);
  report.train_rmse = summarize(report.per_fold, &FoldResult::train_rmse);
  report.test_rmse = summarize(report.per_fold, &FoldResult::test_rmse);
}

}  // namespace eval_detail

/// Trains one fresh model per fold (folds may run concurrently) and scores each on its
/// held-out fold and its training portion. Diverged folds are reported, not dropped.
/// Training seeds are derived as cfg.seed + fold.
inline EvalReport cross_validate(std::span<const Sample> data, const ModelFactory& factory, const TrainConfig& cfg,
                                 const FoldPlan& plan, unsigned threads = 1) {
  if (plan.size() != data.size())
    throw ValidationError("fold plan covers " + std::to_string(plan.size()) + " samples, data has " +
                          std::to_string(data.size()));
  cfg.validate();
  EvalReport report;
  report.protocol = "kfold k=" + std::to_string(plan.k) + " seed=" + std::to_string(plan.seed);
  report.per_fold.resize(plan.k);

  auto run = [&](std::size_t fold) {
    TrainConfig fold_cfg = cfg;
    fold_cfg.seed = cfg.seed + fold;
    return eval_detail::run_split(data, plan.train_indices(fold), plan.test_indices(fold), factory(fold), fold_cfg,
                                  fold);
  };
  threads = std::max(1u, threads);
  for (std::size_t start = 0; start < plan.k; start += threads) {
    std::vector<std::future<FoldResult>> pending;
    for (std::size_t f = start; f < std::min<std::size_t>(plan.k, start + threads); ++f)
      pending.push_back(std::async(threads == 1 ? std::launch::deferred : std::launch::async, run, f));
    for (auto& p : pending) {
      FoldResult r = p.get();
      report.per_fold[r.fold] = std::move(r);
    }
  }
  eval_detail::finalize(report);
  report.config = Json{{"protocol", "kfold"}, {"k", plan.k}, {"fold_seed", plan.seed}, {"train", to_json(cfg)}};
  return report;
}

/// Single train/test split; reported as one "fold".
inline EvalReport holdout_evaluate(std::span<const Sample> data, const ModelFactory& factory, const TrainConfig& cfg,
                                   double test_fraction, std::uint64_t split_seed) {
  cfg.validate();
  HoldoutSplit split = holdout_split(data.size(), test_fraction, split_seed);
  EvalReport report;
  report.protocol = "holdout test_fraction=" + number_text(test_fraction) + " seed=" + std::to_string(split_seed);
  report.per_fold.push_back(eval_detail::run_split(data, split.train, split.test, factory(0), cfg, 0));
  eval_detail::finalize(report);
  report.config = Json{{"protocol", "holdout"},
                       {"test_fraction", test_fraction},
                       {"split_seed", split_seed},
                       {"train", to_json(cfg)}};
  return report;
}

inline Json to_json(const EvalReport& r) {
  Json j;
  j["protocol"] = r.protocol;
  j["complete"] = r.complete;
  j["completed_folds"] = r.completed_folds;
  j["folds"] = Json::array();
  for (const auto& f : r.per_fold) {
    Json e{{"fold", f.fold}, {"completed", f.completed}, {"train_size", f.train_size}, {"test_size", f.test_size}};
    if (f.completed) {
      e["train_mae"] = f.train_mae;
      e["test_mae"] = f.test_mae;
      e["train_rmse"] = f.train_rmse;
      e["test_rmse"] = f.test_rmse;
    } else {
      e["failure"] = f.failure;
    }
    j["folds"].push_back(std::move(e));
  }
  auto summary = [](const MetricSummary& s) { return Json{{"mean", s.mean}, {"stddev", s.stddev}}; };
  j["aggregate"] = Json{{"train_mae", summary(r.train_mae)},
                        {"test_mae", summary(r.test_mae)},
                        {"train_rmse", summary(r.train_rmse)},
                        {"test_rmse", summary(r.test_rmse)}};
  j["config"] = r.config;
  return j;
}

/// Fixed-width text table for terminals.
inline std::string format_table(const EvalReport& r, const std::string& title) {
  std::string out = title + " [" + r.protocol + "]\n";
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-6s %6s %6s %10s %10s %10s %10s\n", "fold", "train", "test", "train_mae", "test_mae",
                "train_rmse", "test_rmse");
  out += buf;
  for (const auto& f : r.per_fold) {
    if (f.completed)
      std::snprintf(buf, sizeof buf, "%-6zu %6zu %6zu %10.3f %10.3f %10.3f %10.3f\n", f.fold, f.train_size, f.test_size,
                    f.train_mae, f.test_mae, f.train_rmse, f.test_rmse);
    else
      std::snprintf(buf, sizeof buf, "%-6zu %6zu %6zu FAILED: %s\n", f.fold, f.train_size, f.test_size,
                    f.failure.c_str());
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "%-6s %13s %10.3f %10.3f %10.3f %10.3f\n", "mean", "", r.train_mae.mean,
                r.test_mae.mean, r.train_rmse.mean, r.test_rmse.mean);
  out += buf;
  std::snprintf(buf, sizeof buf, "%-6s %13s %10.3f %10.3f %10.3f %10.3f\n", "std", "", r.train_mae.stddev,
                r.test_mae.stddev, r.train_rmse.stddev, r.test_rmse.stddev);
  out += buf;
  if (!r.complete)
    out += "INCOMPLETE: " + std::to_string(r.completed_folds) + "/" + std::to_string(r.per_fold.size()) +
           " folds completed\n";
  return out;
}

}  // namespace dti

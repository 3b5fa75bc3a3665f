#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "dti/mlp.hpp"
#include "dti/rng.hpp"

using namespace dti;

namespace {

/// Straight-line forward pass over the public parameters.
double naive_forward(const MlpModel& m, std::vector<double> a) {
  for (std::size_t k = 0; k < m.layers.size(); ++k) {
    const auto& l = m.layers[k];
    std::vector<double> z(l.out);
    for (std::size_t o = 0; o < l.out; ++o) {
      double s = l.biases[o];
      for (std::size_t i = 0; i < l.in; ++i) s += l.weights[o * l.in + i] * a[i];
      z[o] = k + 1 < m.layers.size() ? std::max(0.0, s) : s;
    }
    a = std::move(z);
  }
  return a[0];
}

double loss(const MlpModel& m, const std::vector<double>& x, double y) {
  const double r = predict(m, x) - y;
  return 0.5 * r * r;
}

/// Smallest |pre-activation| over hidden units; near zero means the loss has a kink nearby.
double min_hidden_margin(const MlpModel& m, const std::vector<double>& x) {
  auto c = forward(m, x);
  double best = INFINITY;
  for (std::size_t k = 0; k + 1 < c.preactivations.size(); ++k)
    for (double z : c.preactivations[k]) best = std::min(best, std::abs(z));
  return best;
}

std::vector<double> random_input(Rng& rng, std::size_t d) {
  std::vector<double> x(d);
  for (auto& v : x) v = rng.uniform(-1.0, 1.0);
  return x;
}

}  // namespace

TEST(MlpShape, ParameterCounts) {
  EXPECT_EQ(param_count({73, 128, 64, 32, 1}), 19841u);
  EXPECT_EQ(param_count({73, 128}), 73u * 128u + 128u);
  EXPECT_EQ(param_count({128, 64}), 8256u);
  EXPECT_EQ(param_count({64, 32}), 2080u);
  EXPECT_EQ(param_count({32, 1}), 33u);
  EXPECT_EQ(param_count({5, 1}), 6u);
  EXPECT_EQ(param_count({2, 3, 1}), 13u);
  EXPECT_EQ(MlpModel::zeros({73, 128, 64, 32, 1}).parameter_count(), 19841u);
  EXPECT_THROW(param_count({4}), ValidationError);
  EXPECT_THROW(param_count({4, 0, 1}), ValidationError);
  EXPECT_THROW(MlpModel::zeros({4, 2}), ValidationError);
}

TEST(MlpForward, ZeroAndIdentityNetworks) {
  auto z = MlpModel::zeros({3, 4, 1});
  EXPECT_EQ(predict(z, std::vector<double>{1, 2, 3}), 0.0);
  auto id = MlpModel::zeros({1, 1});
  id.layers[0].weights[0] = 1.0;
  for (double x : {-3.5, 0.0, 42.0}) EXPECT_EQ(predict(id, std::vector<double>{x}), x);
  auto relu = MlpModel::zeros({1, 1, 1});
  relu.layers[0].weights[0] = 1.0;
  relu.layers[1].weights[0] = 2.0;
  relu.layers[1].biases[0] = 1.0;
  EXPECT_EQ(predict(relu, std::vector<double>{-4.0}), 1.0);
  EXPECT_EQ(predict(relu, std::vector<double>{3.0}), 7.0);
  EXPECT_THROW(predict(z, std::vector<double>{1, 2}), ValidationError);
}

TEST(MlpForward, MatchesNaiveOracle) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 1 + rng.below(40);
    auto m = MlpModel::he_uniform({d, 1 + rng.below(20), 1 + rng.below(10), 1}, rng.next());
    for (auto& l : m.layers)
      for (auto& b : l.biases) b = rng.uniform(-0.5, 0.5);
    auto x = random_input(rng, d);
    if (trial % 3 == 0)
      for (std::size_t i = 0; i < d; i += 2) x[i] = 0.0;  // exercises the sparse path
    EXPECT_NEAR(predict(m, x), naive_forward(m, x), 1e-12);
  }
}

TEST(MlpInit, HeUniformBoundsAndDeterminism) {
  auto a = MlpModel::he_uniform({50, 20, 1}, 11);
  auto b = MlpModel::he_uniform({50, 20, 1}, 11);
  auto c = MlpModel::he_uniform({50, 20, 1}, 12);
  EXPECT_EQ(a.layers[0].weights, b.layers[0].weights);
  EXPECT_NE(a.layers[0].weights, c.layers[0].weights);
  for (const auto& l : a.layers) {
    const double limit = std::sqrt(6.0 / static_cast<double>(l.in));
    double sq = 0.0;
    for (double w : l.weights) {
      EXPECT_LE(std::abs(w), limit);
      sq += w * w;
    }
    for (double bias : l.biases) EXPECT_EQ(bias, 0.0);
    if (l.weights.size() >= 500) {
      EXPECT_NEAR(sq / l.weights.size(), limit * limit / 3.0, 0.2 * limit * limit / 3.0);
    }
  }
}

TEST(MlpGradient, FiniteDifferenceAgreement) {
  Rng rng(2024);
  const double h = 1e-5;
  int checked = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t d = 1 + rng.below(6);
    std::vector<std::size_t> sizes{d};
    for (std::size_t k = rng.below(3); k-- > 0;) sizes.push_back(1 + rng.below(5));
    sizes.push_back(1);
    auto m = MlpModel::he_uniform(sizes, rng.next());
    for (auto& l : m.layers)
      for (auto& b : l.biases) b = rng.uniform(-0.3, 0.3);
    const auto x = random_input(rng, d);
    const double y = rng.uniform(-2.0, 2.0);
    if (min_hidden_margin(m, x) < 1e-3) continue;
    const Gradients g = backward(m, x, y);
    for (std::size_t k = 0; k < m.layers.size(); ++k) {
      auto check = [&](double& p, double analytic) {
        const double saved = p;
        p = saved + h;
        const double up = loss(m, x, y);
        p = saved - h;
        const double down = loss(m, x, y);
        p = saved;
        const double numeric = (up - down) / (2 * h);
        const double err = std::abs(numeric - analytic);
        EXPECT_TRUE(err <= 1e-7 || err <= 1e-4 * std::max(std::abs(numeric), std::abs(analytic)))
            << "layer " << k << " analytic " << analytic << " numeric " << numeric;
        ++checked;
      };
      for (std::size_t p = 0; p < m.layers[k].weights.size(); ++p) check(m.layers[k].weights[p], g.weights[k][p]);
      for (std::size_t p = 0; p < m.layers[k].biases.size(); ++p) check(m.layers[k].biases[p], g.biases[k][p]);
    }
  }
  EXPECT_GE(checked, 200);
}

TEST(MlpGradient, LinearModelClosedForm) {
  auto m = MlpModel::zeros({3, 1});
  m.layers[0].weights = {0.5, -1.0, 2.0};
  m.layers[0].biases = {0.25};
  const std::vector<double> x{1.0, 2.0, 3.0};
  const double r = (0.5 - 2.0 + 6.0 + 0.25) - 1.0;
  auto g = backward(m, x, 1.0);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(g.weights[0][i], r * x[i]);
  EXPECT_DOUBLE_EQ(g.biases[0][0], r);
  auto cache = forward(m, x);
  EXPECT_EQ(backward(m, cache, 1.0).weights, g.weights);
}

TEST(MlpGradient, ReluDerivativeAtZeroIsZero) {
  auto m = MlpModel::zeros({1, 1, 1});
  m.layers[1].weights[0] = 1.0;
  auto g = backward(m, std::vector<double>{1.0}, 5.0);  // hidden pre-activation exactly 0
  EXPECT_EQ(g.weights[0][0], 0.0);
  EXPECT_EQ(g.biases[0][0], 0.0);
  EXPECT_EQ(g.biases[1][0], -5.0);
}

TEST(MlpTrain, MemorizesSingleSample) {
  std::vector<Sample> data{{{0.2, 0.8, 0.5}, 3.0}};
  TrainConfig cfg;
  cfg.epochs = 500;
  cfg.learning_rate = 1e-2;
  auto r = train(MlpModel::he_uniform({3, 16, 8, 1}, 5), data, cfg);
  EXPECT_LT(loss(r.model, data[0].x, data[0].y), 1e-4);
  EXPECT_EQ(r.loss_trace.size(), 500u);
}

TEST(MlpTrain, DeterministicForFixedSeed) {
  Rng rng(8);
  std::vector<Sample> data;
  for (int i = 0; i < 30; ++i) {
    auto x = random_input(rng, 4);
    data.push_back({x, 10.0 * x[0] - 3.0 * x[2]});
  }
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.seed = 17;
  auto a = train(MlpModel::he_uniform({4, 8, 1}, 1), data, cfg);
  auto b = train(MlpModel::he_uniform({4, 8, 1}, 1), data, cfg);
  EXPECT_EQ(a.loss_trace, b.loss_trace);
  EXPECT_EQ(to_json(a.model).dump(), to_json(b.model).dump());
  cfg.seed = 18;
  auto c = train(MlpModel::he_uniform({4, 8, 1}, 1), data, cfg);
  EXPECT_NE(a.loss_trace, c.loss_trace);
}

TEST(MlpTrain, LearnsConstantTarget) {
  Rng rng(1);
  std::vector<Sample> data;
  for (int i = 0; i < 40; ++i) data.push_back({random_input(rng, 5), 50.0});
  TrainConfig cfg;
  cfg.epochs = 300;
  auto r = train(MlpModel::he_uniform({5, 16, 8, 1}, 2), data, cfg);
  std::vector<double> p, t;
  for (const auto& s : data) {
    p.push_back(predict(r.model, s.x));
    t.push_back(s.y);
  }
  EXPECT_LT(mae(p, t), 1.0);
  EXPECT_LT(r.loss_trace.back(), r.loss_trace.front());
}

TEST(MlpTrain, DivergenceReported) {
  std::vector<Sample> data{{{1.0, 1.0}, 1e6}, {{0.5, 0.9}, -1e6}};
  TrainConfig cfg;
  cfg.learning_rate = 10.0;
  cfg.epochs = 200;
  try {
    train(MlpModel::he_uniform({2, 4, 1}, 3), data, cfg);
    FAIL() << "expected divergence";
  } catch (const TrainingDiverged& e) {
    EXPECT_GE(e.epoch(), 1);
    EXPECT_EQ(e.learning_rate(), 10.0);
    EXPECT_EQ(e.exit_code(), 2);
  }
}

TEST(MlpTrain, ConfigValidation) {
  std::vector<Sample> data{{{1.0}, 1.0}};
  auto m = MlpModel::zeros({1, 1});
  TrainConfig bad;
  bad.batch_size = 0;
  EXPECT_THROW(train(m, data, bad), ValidationError);
  bad = {};
  bad.momentum = 1.0;
  EXPECT_THROW(train(m, data, bad), ValidationError);
  bad = {};
  bad.learning_rate = -1.0;
  EXPECT_THROW(train(m, data, bad), ValidationError);
  EXPECT_THROW(train(m, std::vector<Sample>{}, TrainConfig{}), ValidationError);
  EXPECT_THROW(train(m, std::vector<Sample>{{{1.0, 2.0}, 0.0}}, TrainConfig{}), ValidationError);
  auto cfg = train_config_from_json(Json{{"epochs", 5}, {"learning_rate", 0.01}});
  EXPECT_EQ(cfg.epochs, 5);
  EXPECT_EQ(cfg.batch_size, 8);
  EXPECT_THROW(train_config_from_json(Json{{"epochs", 0}}), ValidationError);
}

TEST(MlpMetrics, MaeRmseExamples) {
  const std::vector<double> p{1.0, 2.0, 3.0}, t{2.0, 2.0, 5.0};
  EXPECT_DOUBLE_EQ(mae(p, t), 1.0);
  EXPECT_DOUBLE_EQ(rmse(p, t), std::sqrt(5.0 / 3.0));
  EXPECT_EQ(mae(t, t), 0.0);
  EXPECT_THROW(mae(p, std::vector<double>{1.0}), ValidationError);
  EXPECT_EQ(clamp_prediction(-3.0), 0.0);
  EXPECT_EQ(clamp_prediction(104.0), 100.0);
  EXPECT_EQ(clamp_prediction(55.5), 55.5);
}

TEST(MlpPersistence, JsonRoundTripIsExact) {
  auto m = MlpModel::he_uniform({6, 5, 3, 1}, 99);
  m.layers[1].biases[2] = 0.1 + 0.2;
  TrainConfig cfg;
  cfg.seed = 4;
  auto back = model_from_json(Json::parse(to_json(m, &cfg).dump()));
  ASSERT_EQ(back.layer_sizes, m.layer_sizes);
  for (std::size_t k = 0; k < m.layers.size(); ++k) {
    EXPECT_EQ(back.layers[k].weights, m.layers[k].weights);
    EXPECT_EQ(back.layers[k].biases, m.layers[k].biases);
  }
  auto j = to_json(m);
  j["layers"][0]["weights"].erase(0);
  EXPECT_THROW(model_from_json(j), ValidationError);
  j = to_json(m);
  j["activation"] = "tanh";
  EXPECT_THROW(model_from_json(j), ValidationError);
}

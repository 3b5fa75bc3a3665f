#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "dti/error.hpp"
#include "dti/io.hpp"
#include "dti/rng.hpp"

namespace dti {

/// Affine map from `in` to `out` units. Weights are row-major, one row per output unit.
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;  // out x in
  std::vector<double> biases;   // out

  double& w(std::size_t o, std::size_t i) { return weights[o * in + i]; }
  double w(std::size_t o, std::size_t i) const { return weights[o * in + i]; }
};

inline std::size_t param_count(std::span<const std::size_t> layer_sizes) {
  if (layer_sizes.size() < 2) throw ValidationError("a network needs at least an input and an output layer");
  std::size_t total = 0;
  for (std::size_t k = 0; k + 1 < layer_sizes.size(); ++k) {
    if (layer_sizes[k] == 0 || layer_sizes[k + 1] == 0) throw ValidationError("layer sizes must be positive");
    total += layer_sizes[k] * layer_sizes[k + 1] + layer_sizes[k + 1];
  }
  return total;
}

inline std::size_t param_count(std::initializer_list<std::size_t> layer_sizes) {
  return param_count(std::span<const std::size_t>(layer_sizes.begin(), layer_sizes.size()));
}

/// Feedforward regressor: ReLU hidden layers, one linear output unit.
struct MlpModel {
  std::vector<std::size_t> layer_sizes;
  std::vector<DenseLayer> layers;

  /// All parameters zero.
  static MlpModel zeros(std::vector<std::size_t> sizes) {
    param_count(sizes);
    if (sizes.back() != 1) throw ValidationError("the output layer must have exactly one unit");
    MlpModel m;
    m.layer_sizes = std::move(sizes);
    for (std::size_t k = 0; k + 1 < m.layer_sizes.size(); ++k) {
      DenseLayer l;
      l.in = m.layer_sizes[k];
      l.out = m.layer_sizes[k + 1];
      l.weights.assign(l.in * l.out, 0.0);
      l.biases.assign(l.out, 0.0);
      m.layers.push_back(std::move(l));
    }
    return m;
  }

  /// He-uniform weights, U(-sqrt(6/fan_in), +sqrt(6/fan_in)); zero biases.
  static MlpModel he_uniform(std::vector<std::size_t> sizes, std::uint64_t seed) {
    MlpModel m = zeros(std::move(sizes));
    Rng rng(seed);
    for (auto& l : m.layers) {
      const double limit = std::sqrt(6.0 / static_cast<double>(l.in));
      for (auto& w : l.weights) w = rng.uniform(-limit, limit);
    }
    return m;
  }

  std::size_t input_size() const { return layer_sizes.front(); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weights.size() + l.biases.size();
    return n;
  }
};

/// Per-layer inputs and pre-activations from one forward pass.
struct ForwardCache {
  std::vector<std::vector<double>> activations;     // [0] = input, [k] = output of layer k-1
  std::vector<std::vector<double>> preactivations;  // [k] = affine output of layer k

  double output() const { return preactivations.back()[0]; }
};

struct Gradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  static Gradients like(const MlpModel& m) {
    Gradients g;
    for (const auto& l : m.layers) {
      g.weights.emplace_back(l.weights.size(), 0.0);
      g.biases.emplace_back(l.biases.size(), 0.0);
    }
    return g;
  }

  void zero() {
    for (auto& v : weights) std::fill(v.begin(), v.end(), 0.0);
    for (auto& v : biases) std::fill(v.begin(), v.end(), 0.0);
  }
};

namespace mlp_detail {

inline void nonzero_indices(std::span<const double> a, std::vector<std::size_t>& idx) {
  idx.clear();
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != 0.0) idx.push_back(i);
}

/// z = W a + b. Zero inputs are skipped, which leaves every sum unchanged.
inline void affine(const DenseLayer& l, std::span<const double> a, std::vector<double>& z,
                   std::vector<std::size_t>& nz) {
  z.resize(l.out);
  nonzero_indices(a, nz);
  const bool sparse = nz.size() * 2 < l.in;
  for (std::size_t o = 0; o < l.out; ++o) {
    const double* row = l.weights.data() + o * l.in;
    double s = l.biases[o];
    if (sparse) {
      for (std::size_t i : nz) s += row[i] * a[i];
    } else {
      // Four fixed lanes: still a deterministic order, but not one long dependency chain.
      double p[4] = {0.0, 0.0, 0.0, 0.0};
      std::size_t i = 0;
      for (; i + 4 <= l.in; i += 4)
        for (std::size_t q = 0; q < 4; ++q) p[q] += row[i + q] * a[i + q];
      for (; i < l.in; ++i) p[0] += row[i] * a[i];
      s += (p[0] + p[1]) + (p[2] + p[3]);
    }
    z[o] = s;
  }
}

struct Workspace {
  ForwardCache cache;
  std::vector<double> delta, delta_prev;
  std::vector<std::size_t> nz;
};

inline void forward_into(const MlpModel& m, std::span<const double> x, Workspace& ws) {
  auto& c = ws.cache;
  const std::size_t n = m.layers.size();
  c.activations.resize(n + 1);
  c.preactivations.resize(n);
  c.activations[0].assign(x.begin(), x.end());
  for (std::size_t k = 0; k < n; ++k) {
    affine(m.layers[k], c.activations[k], c.preactivations[k], ws.nz);
    auto& a = c.activations[k + 1];
    const auto& z = c.preactivations[k];
    a.resize(z.size());
    const bool hidden = k + 1 < n;
    for (std::size_t o = 0; o < z.size(); ++o) a[o] = hidden ? (z[o] > 0.0 ? z[o] : 0.0) : z[o];
  }
}

/// Adds d/dθ of 0.5 (y_hat - y)^2 to `g`, with ReLU'(0) = 0.
inline void accumulate(const MlpModel& m, Workspace& ws, double residual, Gradients& g) {
  const auto& c = ws.cache;
  ws.delta.assign(1, residual);
  for (std::size_t k = m.layers.size(); k-- > 0;) {
    const DenseLayer& l = m.layers[k];
    const auto& a = c.activations[k];
    auto& gw = g.weights[k];
    auto& gb = g.biases[k];
    nonzero_indices(a, ws.nz);
    const bool sparse = ws.nz.size() * 2 < l.in;
    for (std::size_t o = 0; o < l.out; ++o) {
      const double d = ws.delta[o];
      gb[o] += d;
      if (d == 0.0) continue;
      double* grow = gw.data() + o * l.in;
      if (sparse) {
        for (std::size_t i : ws.nz) grow[i] += d * a[i];
      } else {
        for (std::size_t i = 0; i < l.in; ++i) grow[i] += d * a[i];
      }
    }
    if (k == 0) break;
    ws.delta_prev.assign(l.in, 0.0);
    for (std::size_t o = 0; o < l.out; ++o) {
      const double d = ws.delta[o];
      if (d == 0.0) continue;
      const double* row = l.weights.data() + o * l.in;
      for (std::size_t i = 0; i < l.in; ++i) ws.delta_prev[i] += row[i] * d;
    }
    const auto& zprev = c.preactivations[k - 1];
    for (std::size_t i = 0; i < l.in; ++i)
      if (!(zprev[i] > 0.0)) ws.delta_prev[i] = 0.0;
    std::swap(ws.delta, ws.delta_prev);
  }
}

inline void check_input(const MlpModel& m, std::span<const double> x) {
  if (x.size() != m.input_size())
    throw ValidationError("input has " + std::to_string(x.size()) + " features, network expects " +
                          std::to_string(m.input_size()));
}

}  // namespace mlp_detail

inline ForwardCache forward(const MlpModel& model, std::span<const double> x) {
  mlp_detail::check_input(model, x);
  mlp_detail::Workspace ws;
  mlp_detail::forward_into(model, x, ws);
  return std::move(ws.cache);
}

/// Raw (unclamped) network output.
inline double predict(const MlpModel& model, std::span<const double> x) { return forward(model, x).output(); }

/// Reporting-boundary view of a prediction on the 0-100 scale.
inline double clamp_prediction(double raw) { return std::clamp(raw, 0.0, 100.0); }

/// Exact gradient of 0.5 (y_hat - target)^2 for one sample.
inline Gradients backward(const MlpModel& model, std::span<const double> x, double target) {
  mlp_detail::check_input(model, x);
  mlp_detail::Workspace ws;
  mlp_detail::forward_into(model, x, ws);
  Gradients g = Gradients::like(model);
  mlp_detail::accumulate(model, ws, ws.cache.output() - target, g);
  return g;
}

/// Same, reusing a cache from forward() on the same model.
inline Gradients backward(const MlpModel& model, const ForwardCache& cache, double target) {
  mlp_detail::Workspace ws;
  ws.cache = cache;
  Gradients g = Gradients::like(model);
  mlp_detail::accumulate(model, ws, cache.output() - target, g);
  return g;
}

struct Sample {
  std::vector<double> x;
  double y = 0.0;
};

struct TrainConfig {
  int epochs = 1000;
  double learning_rate = 1e-3;
  int batch_size = 8;
  double momentum = 0.9;
  std::uint64_t seed = 0;

  void validate() const {
    if (epochs < 1) throw ValidationError("epochs must be positive");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ValidationError("learning_rate must be positive");
    if (batch_size < 1) throw ValidationError("batch_size must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ValidationError("momentum must lie in [0,1)");
  }
};

class TrainingDiverged : public DataError {
public:
  TrainingDiverged(int epoch, double learning_rate)
      : DataError("training diverged (non-finite loss) at epoch " + std::to_string(epoch) + " with learning rate " +
                  number_text(learning_rate)),
        epoch_(epoch), learning_rate_(learning_rate) {}
  int epoch() const noexcept { return epoch_; }
  double learning_rate() const noexcept { return learning_rate_; }

private:
  int epoch_;
  double learning_rate_;
};

struct TrainResult {
  MlpModel model;
  std::vector<double> loss_trace;  // mean squared error per epoch, measured during the epoch
};

/// Mini-batch SGD with momentum on the mean of 0.5 (y_hat - y)^2. The visiting order of
/// epoch e is a pure function of (cfg.seed, e).
inline TrainResult train(MlpModel model, std::span<const Sample> data, const TrainConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw ValidationError("cannot train on an empty dataset");
  for (const auto& s : data) mlp_detail::check_input(model, s.x);

  mlp_detail::Workspace ws;
  Gradients grad = Gradients::like(model);
  Gradients velocity = Gradients::like(model);
  std::vector<std::size_t> order(data.size());
  TrainResult result;
  result.loss_trace.reserve(static_cast<std::size_t>(cfg.epochs));

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    rng.shuffle(std::span<std::size_t>(order));

    double sq_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      grad.zero();
      for (std::size_t b = start; b < stop; ++b) {
        const Sample& s = data[order[b]];
        mlp_detail::forward_into(model, s.x, ws);
        const double r = ws.cache.output() - s.y;
        sq_sum += r * r;
        mlp_detail::accumulate(model, ws, r, grad);
      }
      const double scale = 1.0 / static_cast<double>(stop - start);
      for (std::size_t k = 0; k < model.layers.size(); ++k) {
        auto& l = model.layers[k];
        for (std::size_t p = 0; p < l.weights.size(); ++p) {
          double& v = velocity.weights[k][p];
          v = cfg.momentum * v - cfg.learning_rate * (grad.weights[k][p] * scale);
          l.weights[p] += v;
        }
        for (std::size_t p = 0; p < l.biases.size(); ++p) {
          double& v = velocity.biases[k][p];
          v = cfg.momentum * v - cfg.learning_rate * (grad.biases[k][p] * scale);
          l.biases[p] += v;
        }
      }
    }
    const double mse = sq_sum / static_cast<double>(data.size());
    if (!std::isfinite(mse)) throw TrainingDiverged(epoch, cfg.learning_rate);
    result.loss_trace.push_back(mse);
  }
  result.model = std::move(model);
  return result;
}

inline double mae(std::span<const double> preds, std::span<const double> targets) {
  if (preds.size() != targets.size() || preds.empty())
    throw ValidationError("mae needs two non-empty lists of equal length");
  double s = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) s += std::abs(preds[i] - targets[i]);
  return s / static_cast<double>(preds.size());
}

inline double rmse(std::span<const double> preds, std::span<const double> targets) {
  if (preds.size() != targets.size() || preds.empty())
    throw ValidationError("rmse needs two non-empty lists of equal length");
  double s = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) s += (preds[i] - targets[i]) * (preds[i] - targets[i]);
  return std::sqrt(s / static_cast<double>(preds.size()));
}

inline Json to_json(const TrainConfig& c) {
  return Json{{"epochs", c.epochs},
              {"learning_rate", c.learning_rate},
              {"batch_size", c.batch_size},
              {"momentum", c.momentum},
              {"seed", c.seed},
              {"init", "he_uniform"}};
}

inline TrainConfig train_config_from_json(const Json& j, TrainConfig base = {}) {
  try {
    base.epochs = j.value("epochs", base.epochs);
    base.learning_rate = j.value("learning_rate", base.learning_rate);
    base.batch_size = j.value("batch_size", base.batch_size);
    base.momentum = j.value("momentum", base.momentum);
    base.seed = j.value("seed", base.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("invalid training section: ") + e.what());
  }
  base.validate();
  return base;
}

inline Json to_json(const MlpModel& m, const TrainConfig* cfg = nullptr) {
  Json j;
  j["layer_sizes"] = m.layer_sizes;
  j["activation"] = "relu";
  j["output_activation"] = "linear";
  j["layers"] = Json::array();
  for (const auto& l : m.layers) j["layers"].push_back(Json{{"weights", l.weights}, {"biases", l.biases}});
  if (cfg) {
    j["train_config"] = to_json(*cfg);
    j["seed"] = cfg->seed;
  }
  return j;
}

inline MlpModel model_from_json(const Json& j) {
  try {
    MlpModel m = MlpModel::zeros(j.at("layer_sizes").get<std::vector<std::size_t>>());
    if (j.value("activation", std::string("relu")) != "relu" ||
        j.value("output_activation", std::string("linear")) != "linear")
      throw ValidationError("only relu hidden layers with a linear output are supported");
    const auto& layers = j.at("layers");
    if (layers.size() != m.layers.size()) throw ValidationError("model layer count does not match layer_sizes");
    for (std::size_t k = 0; k < m.layers.size(); ++k) {
      auto w = layers[k].at("weights").get<std::vector<double>>();
      auto b = layers[k].at("biases").get<std::vector<double>>();
      if (w.size() != m.layers[k].weights.size() || b.size() != m.layers[k].biases.size())
        throw ValidationError("layer " + std::to_string(k) + " parameter shapes do not match layer_sizes");
      m.layers[k].weights = std::move(w);
      m.layers[k].biases = std::move(b);
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed model: ") + e.what());
  }
}

}  // namespace dti

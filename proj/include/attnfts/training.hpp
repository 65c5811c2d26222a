#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "attnfts/data.hpp"
#include "attnfts/model.hpp"

namespace attnfts {

inline double mse(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.size() != targets.size())
    throw ArgumentError("mse: " + std::to_string(predictions.size()) + " predictions vs " +
                        std::to_string(targets.size()) + " targets");
  if (predictions.empty()) throw ArgumentError("mse: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = predictions[i] - targets[i];
    s += d * d;
  }
  return s / static_cast<double>(predictions.size());
}

/// Adam moments for a list of parameter tensors. Defaults are the usual
/// Kingma-Ba values.
struct AdamState {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t t = 0;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
};

inline void adam_step(std::span<Matrix* const> params, std::span<const Matrix* const> grads,
                      AdamState& state) {
  if (params.size() != grads.size())
    throw ShapeError("adam_step: " + std::to_string(params.size()) + " tensors but " +
                     std::to_string(grads.size()) + " gradients");
  if (state.m.empty()) {
    for (const Matrix* p : params) {
      state.m.push_back(zeros_like(*p));
      state.v.push_back(zeros_like(*p));
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("adam_step: moment count mismatch");
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!params[k]->same_shape(*grads[k]) || !params[k]->same_shape(state.m[k]))
      throw ShapeError("adam_step: tensor " + std::to_string(k) + " shape " + params[k]->shape() +
                       " vs gradient " + grads[k]->shape());
  }

  ++state.t;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Matrix& p = *params[k];
    const Matrix& g = *grads[k];
    Matrix& m = state.m[k];
    Matrix& v = state.v[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      p[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

inline void adam_step(ParameterSet& params, const ParameterSet& grads, AdamState& state) {
  const std::vector<Matrix*> p = params.tensors();
  const std::vector<const Matrix*> g = grads.tensors();
  adam_step(std::span<Matrix* const>(p), std::span<const Matrix* const>(g), state);
}

struct TrainConfig {
  std::optional<std::size_t> max_epochs;  // unset: 100 for Plain, 25 for Attention
  std::size_t batch_size = 32;
  bool shuffle_each_epoch = true;
  double learning_rate = 0.001;
  double clip_norm = 5.0;  // global gradient norm; 0 disables clipping
  std::uint64_t seed = 0;

  std::size_t epochs_for(Variant v) const noexcept {
    if (max_epochs) return *max_epochs;
    return v == Variant::Attention ? 25 : 100;
  }

  void validate() const {
    std::string problems;
    if (max_epochs && *max_epochs < 1) problems += " max_epochs must be >= 1;";
    if (batch_size < 1) problems += " batch_size must be >= 1;";
    if (!(learning_rate >= 0.0)) problems += " learning_rate must be >= 0;";
    if (!(clip_norm >= 0.0)) problems += " clip_norm must be >= 0;";
    if (!problems.empty()) {
      problems.pop_back();
      throw ConfigError("invalid train config:" + problems);
    }
  }
};

struct EpochLoss {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
};

/// train_loss is the running average of mini-batch losses over the epoch
/// (with dropout active); val_loss is the full validation MSE measured in
/// Infer mode after the epoch's last update.
struct LossHistory {
  std::size_t epoch_cap = 0;
  std::vector<EpochLoss> epochs;

  std::size_t size() const noexcept { return epochs.size(); }
};

inline void write_csv(const LossHistory& history, std::ostream& out) {
  out << "epoch,train_loss,val_loss\n";
  for (const EpochLoss& e : history.epochs)
    out << e.epoch << ',' << format_double(e.train_loss) << ',' << format_double(e.val_loss)
        << '\n';
}

inline std::vector<double> predict(const Model& model, const WindowSet& data) {
  std::vector<double> out;
  out.reserve(data.size());
  for (const Matrix& w : data.windows) out.push_back(forward(model, w, Mode::Infer).value);
  return out;
}

inline double evaluate_loss(const Model& model, const WindowSet& data) {
  return mse(predict(model, data), data.targets);
}

/// Mean squared error of a batch and its parameter gradient.
inline double batch_loss_and_gradient(const Model& model, const WindowSet& data,
                                      std::span<const std::size_t> batch, Mode mode,
                                      SeededRng* rng, ParameterSet& grads) {
  const double n = static_cast<double>(batch.size());
  double loss = 0.0;
  ForwardCache cache;
  for (std::size_t idx : batch) {
    const double y = forward(model, data.windows[idx], mode, rng, &cache).value;
    const double diff = y - data.targets[idx];
    loss += diff * diff;
    backward(model, cache, 2.0 * diff / n, grads);
  }
  return loss / n;
}

/// Rescales grads in place so their global L2 norm is at most max_norm.
inline double clip_global_norm(ParameterSet& grads, double max_norm) {
  double ss = 0.0;
  grads.for_each([&](const std::string&, const Matrix& g) {
    for (double x : g.data()) ss += x * x;
  });
  const double norm = std::sqrt(ss);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    grads.for_each([&](const std::string&, Matrix& g) { g *= s; });
  }
  return norm;
}

/// One pass over data in mini-batches. Returns the sample-weighted mean of
/// the batch losses, so with lr = 0 it equals the full-set MSE.
inline double train_epoch(Model& model, const WindowSet& data, AdamState& adam,
                          const TrainConfig& cfg, SeededRng& rng) {
  if (data.empty()) throw ArgumentError("train_epoch: no training windows");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (cfg.shuffle_each_epoch) rng.shuffle(std::span<std::size_t>(order));

  double weighted = 0.0;
  for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
    const std::size_t len = std::min(cfg.batch_size, order.size() - start);
    const std::span<const std::size_t> batch(order.data() + start, len);
    ParameterSet grads = zero_parameters(model.config);
    const double loss = batch_loss_and_gradient(model, data, batch, Mode::Train, &rng, grads);
    if (!std::isfinite(loss)) throw NumericError("train_epoch: non-finite batch loss");
    weighted += loss * static_cast<double>(len);
    clip_global_norm(grads, cfg.clip_norm);
    adam_step(model.params, grads, adam);
  }
  return weighted / static_cast<double>(data.size());
}

/// Trains for the variant's epoch cap with no early stopping; model holds
/// the final-epoch parameters on return.
inline LossHistory fit(Model& model, const WindowSet& train, const WindowSet& val,
                       const TrainConfig& cfg) {
  cfg.validate();
  if (train.empty() || val.empty()) throw ArgumentError("fit: train and validation sets must be nonempty");
  AdamState adam;
  adam.lr = cfg.learning_rate;
  SeededRng rng(cfg.seed);
  LossHistory history;
  history.epoch_cap = cfg.epochs_for(model.config.variant);
  for (std::size_t e = 1; e <= history.epoch_cap; ++e) {
    const double train_loss = train_epoch(model, train, adam, cfg, rng);
    history.epochs.push_back({e, train_loss, evaluate_loss(model, val)});
  }
  return history;
}

}  // namespace attnfts

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "attnfts/attention.hpp"
#include "attnfts/lstm.hpp"
#include "attnfts/matrix.hpp"

namespace attnfts {

enum class Variant { Plain, Attention };

inline std::string_view to_string(Variant v) noexcept {
  return v == Variant::Plain ? "plain" : "attention";
}

inline Variant parse_variant(std::string_view s) {
  if (s == "plain") return Variant::Plain;
  if (s == "attention") return Variant::Attention;
  throw ConfigError("unknown model variant '" + std::string(s) + "' (expected plain|attention)");
}

enum class Mode { Train, Infer };

struct ModelConfig {
  Variant variant = Variant::Plain;
  std::size_t size = 16;
  std::size_t lag = 15;
  double dropout = 0.0;
  std::size_t input_dim = 1;
  std::size_t attn_dim = 0;  // 0 selects attn_dim = size
  std::uint64_t seed = 0;

  std::size_t alignment_width() const noexcept { return attn_dim == 0 ? size : attn_dim; }

  /// Width of the output layer's input: h_T, or [h_T ; context].
  std::size_t head_width() const noexcept {
    return variant == Variant::Attention ? 2 * size : size;
  }

  std::vector<std::string> violations() const {
    std::vector<std::string> out;
    if (size < 1) out.emplace_back("size must be >= 1");
    if (lag < 2) out.emplace_back("lag must be >= 2");
    if (!(dropout >= 0.0 && dropout < 1.0)) out.emplace_back("dropout must be in [0, 1)");
    if (input_dim < 1) out.emplace_back("input_dim must be >= 1");
    return out;
  }

  void validate() const {
    const auto problems = violations();
    if (problems.empty()) return;
    std::string msg = "invalid model config:";
    for (const auto& p : problems) msg += " " + p + ";";
    msg.pop_back();
    throw ConfigError(msg);
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// All learnable tensors of either variant. Also used as the gradient container.
struct ParameterSet {
  LstmParams encoder;
  std::optional<AttentionParams> attention;
  Matrix head_w;  // 1 x head_width
  Matrix head_b;  // 1 x 1

  template <typename F>
  void for_each(F&& fn) {
    encoder.for_each([&](const std::string& n, Matrix& m) { fn("encoder." + n, m); });
    if (attention)
      attention->for_each([&](const std::string& n, Matrix& m) { fn("attention." + n, m); });
    fn(std::string("head.w"), head_w);
    fn(std::string("head.b"), head_b);
  }

  template <typename F>
  void for_each(F&& fn) const {
    encoder.for_each([&](const std::string& n, const Matrix& m) { fn("encoder." + n, m); });
    if (attention)
      attention->for_each(
          [&](const std::string& n, const Matrix& m) { fn("attention." + n, m); });
    fn(std::string("head.w"), head_w);
    fn(std::string("head.b"), head_b);
  }

  std::vector<Matrix*> tensors() {
    std::vector<Matrix*> out;
    for_each([&](const std::string&, Matrix& m) { out.push_back(&m); });
    return out;
  }

  std::vector<const Matrix*> tensors() const {
    std::vector<const Matrix*> out;
    for_each([&](const std::string&, const Matrix& m) { out.push_back(&m); });
    return out;
  }

  std::size_t count() const {
    std::size_t n = 0;
    for_each([&](const std::string&, const Matrix& m) { n += m.size(); });
    return n;
  }
};

inline ParameterSet zero_parameters(const ModelConfig& cfg) {
  ParameterSet p;
  p.encoder = LstmParams::zeros(cfg.size, cfg.input_dim);
  if (cfg.variant == Variant::Attention)
    p.attention = AttentionParams::zeros(cfg.size, cfg.alignment_width());
  p.head_w = Matrix(1, cfg.head_width());
  p.head_b = Matrix(1, 1);
  return p;
}

struct Model {
  ModelConfig config;
  ParameterSet params;
};

/// Closed-form parameter count for a config.
inline std::size_t param_count(const ModelConfig& cfg) {
  cfg.validate();
  std::size_t n = 4 * (cfg.size * cfg.input_dim + cfg.size * cfg.size + cfg.size);
  if (cfg.variant == Variant::Attention)
    n += 2 * cfg.alignment_width() * cfg.size + cfg.alignment_width();
  return n + cfg.head_width() + 1;
}

inline std::size_t param_count(const Model& model) { return model.params.count(); }

/// Deterministic construction from config.seed. Draw order: encoder,
/// attention (if any), output head.
inline Model build(const ModelConfig& cfg) {
  cfg.validate();
  SeededRng rng(cfg.seed);
  Model model{cfg, {}};
  model.params.encoder = LstmParams::initialized(cfg.size, cfg.input_dim, rng);
  if (cfg.variant == Variant::Attention)
    model.params.attention = AttentionParams::initialized(cfg.size, cfg.alignment_width(), rng);
  model.params.head_w = xavier_init(1, cfg.head_width(), rng);
  model.params.head_b = Matrix(1, 1);
  return model;
}

/// Inverted-dropout mask: each entry 0 with probability rate, else 1/(1-rate).
inline Matrix dropout_mask(std::size_t rows, std::size_t cols, double rate, SeededRng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ArgumentError("dropout rate must be in [0, 1)");
  Matrix mask(rows, cols, 1.0);
  if (rate == 0.0) return mask;
  const double keep_scale = 1.0 / (1.0 - rate);
  for (double& m : mask.data()) m = rng.bernoulli(rate) ? 0.0 : keep_scale;
  return mask;
}

inline Matrix apply_dropout(const Matrix& activations, double rate, SeededRng& rng) {
  return hadamard(activations, dropout_mask(activations.rows(), activations.cols(), rate, rng));
}

struct ForwardCache {
  std::vector<Matrix> input_masks;  // per timestep; empty in Infer mode
  EncodedSequence encoded;
  std::optional<AttentionResult> attention;
  Matrix head_input;  // after dropout
  Matrix head_mask;   // empty in Infer mode
  double output = 0.0;
};

struct Prediction {
  double value = 0.0;
  std::vector<double> attention_weights;  // Attention variant only
};

/// Window is lag x input_dim; row t is x_t. Train mode draws dropout masks
/// from rng (input connections per timestep, then the head input).
inline Prediction forward(const Model& model, const Matrix& window, Mode mode,
                          SeededRng* rng = nullptr, ForwardCache* cache = nullptr) {
  const ModelConfig& cfg = model.config;
  if (window.rows() != cfg.lag || window.cols() != cfg.input_dim) {
    throw ShapeError("forward: window " + window.shape() + " expected " +
                     Matrix::shape_string(cfg.lag, cfg.input_dim));
  }
  const bool drop = mode == Mode::Train && cfg.dropout > 0.0;
  if (drop && rng == nullptr) throw ArgumentError("forward: Train mode with dropout needs an rng");

  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  c = ForwardCache{};

  std::vector<Matrix> xs;
  xs.reserve(cfg.lag);
  for (std::size_t t = 0; t < cfg.lag; ++t) {
    Matrix x = Matrix::column(window.row(t));
    if (drop) {
      c.input_masks.push_back(dropout_mask(cfg.input_dim, 1, cfg.dropout, *rng));
      x = hadamard(x, c.input_masks.back());
    }
    xs.push_back(std::move(x));
  }
  c.encoded = encode_sequence(model.params.encoder, xs);

  const Matrix& s0 = c.encoded.final.h;
  Matrix features(cfg.head_width(), 1);
  std::copy(s0.data().begin(), s0.data().end(), features.data().begin());
  Prediction pred;
  if (cfg.variant == Variant::Attention) {
    c.attention = attend(*model.params.attention, s0, c.encoded.annotations);
    std::copy(c.attention->context.data().begin(), c.attention->context.data().end(),
              features.data().begin() + static_cast<std::ptrdiff_t>(cfg.size));
    pred.attention_weights = c.attention->weights;
  }
  if (drop) {
    c.head_mask = dropout_mask(features.rows(), 1, cfg.dropout, *rng);
    features = hadamard(features, c.head_mask);
  }
  c.head_input = std::move(features);

  const double z = dot(model.params.head_w.data(), c.head_input.data()) + model.params.head_b[0];
  c.output = std::tanh(z);
  pred.value = c.output;
  return pred;
}

/// Accumulates dL/dparams into grads given dL/dy for the cached forward pass.
inline void backward(const Model& model, const ForwardCache& cache, double grad_output,
                     ParameterSet& grads) {
  const ModelConfig& cfg = model.config;
  const double dz = grad_output * (1.0 - cache.output * cache.output);

  for (std::size_t k = 0; k < cache.head_input.size(); ++k)
    grads.head_w[k] += dz * cache.head_input[k];
  grads.head_b[0] += dz;

  Matrix d_features(cfg.head_width(), 1);
  for (std::size_t k = 0; k < d_features.size(); ++k) {
    d_features[k] = model.params.head_w[k] * dz;
    if (!cache.head_mask.empty()) d_features[k] *= cache.head_mask[k];
  }

  const std::size_t T = cache.encoded.annotations.size();
  std::vector<Matrix> d_annotations(T, Matrix(cfg.size, 1));
  Matrix& d_last = d_annotations.back();
  for (std::size_t r = 0; r < cfg.size; ++r) d_last[r] += d_features[r];

  if (cfg.variant == Variant::Attention) {
    Matrix d_context(cfg.size, 1);
    for (std::size_t r = 0; r < cfg.size; ++r) d_context[r] = d_features[cfg.size + r];
    const AttentionGradients ag =
        attention_backward(*model.params.attention, cache.encoded.final.h,
                           cache.encoded.annotations, d_context);
    grads.attention->W_a += ag.params.W_a;
    grads.attention->U_a += ag.params.U_a;
    grads.attention->v_a += ag.params.v_a;
    for (std::size_t j = 0; j < T; ++j) d_annotations[j] += ag.annotations[j];
    d_last += ag.s_prev;
  }

  const LstmGradients lg = lstm_backward(model.params.encoder, cache.encoded.cache, d_annotations);
  for (std::size_t k = 0; k < 4; ++k) {
    grads.encoder.W[k] += lg.params.W[k];
    grads.encoder.U[k] += lg.params.U[k];
    grads.encoder.b[k] += lg.params.b[k];
  }
}

}  // namespace attnfts

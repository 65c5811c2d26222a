#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "attnfts/matrix.hpp"

namespace attnfts {

/// Gate order used for every per-gate array in this header.
enum Gate : std::size_t { kInput = 0, kForget = 1, kOutput = 2, kCell = 3 };
inline constexpr std::array<const char*, 4> kGateNames{"i", "f", "o", "g"};

/// Single-layer LSTM without peepholes.
///
///   i = sigmoid(W_i x + U_i h + b_i)     f = sigmoid(W_f x + U_f h + b_f)
///   o = sigmoid(W_o x + U_o h + b_o)     g = tanh(W_g x + U_g h + b_g)
///   c' = f * c + i * g                   h' = o * tanh(c')
///
/// The same struct carries parameter gradients during backpropagation.
struct LstmParams {
  std::size_t size = 0;
  std::size_t input_dim = 0;
  std::array<Matrix, 4> W;  // size x input_dim
  std::array<Matrix, 4> U;  // size x size
  std::array<Matrix, 4> b;  // size x 1

  static LstmParams zeros(std::size_t size, std::size_t input_dim) {
    LstmParams p;
    p.size = size;
    p.input_dim = input_dim;
    for (std::size_t k = 0; k < 4; ++k) {
      p.W[k] = Matrix(size, input_dim);
      p.U[k] = Matrix(size, size);
      p.b[k] = Matrix(size, 1);
    }
    return p;
  }

  /// Xavier-uniform weights, zero biases except the forget gate at 1.0.
  static LstmParams initialized(std::size_t size, std::size_t input_dim, SeededRng& rng) {
    LstmParams p = zeros(size, input_dim);
    for (std::size_t k = 0; k < 4; ++k) {
      p.W[k] = xavier_init(size, input_dim, rng);
      p.U[k] = xavier_init(size, size, rng);
    }
    p.b[kForget].fill(1.0);
    return p;
  }

  void validate() const {
    for (std::size_t k = 0; k < 4; ++k) {
      if (W[k].rows() != size || W[k].cols() != input_dim || U[k].rows() != size ||
          U[k].cols() != size || b[k].rows() != size || b[k].cols() != 1) {
        throw ShapeError(std::string("LSTM gate ") + kGateNames[k] +
                         " has inconsistent parameter shapes");
      }
    }
  }

  template <typename F>
  void for_each(F&& fn) {
    for (std::size_t k = 0; k < 4; ++k) fn(std::string("W_") + kGateNames[k], W[k]);
    for (std::size_t k = 0; k < 4; ++k) fn(std::string("U_") + kGateNames[k], U[k]);
    for (std::size_t k = 0; k < 4; ++k) fn(std::string("b_") + kGateNames[k], b[k]);
  }

  template <typename F>
  void for_each(F&& fn) const {
    for (std::size_t k = 0; k < 4; ++k) fn(std::string("W_") + kGateNames[k], W[k]);
    for (std::size_t k = 0; k < 4; ++k) fn(std::string("U_") + kGateNames[k], U[k]);
    for (std::size_t k = 0; k < 4; ++k) fn(std::string("b_") + kGateNames[k], b[k]);
  }
};

struct LstmState {
  Matrix h;       // size x 1
  Matrix c_cell;  // size x 1

  static LstmState zeros(std::size_t size) { return {Matrix(size, 1), Matrix(size, 1)}; }
};

/// Everything one timestep's backward pass needs.
struct LstmStepCache {
  Matrix x;
  Matrix h_prev;
  Matrix c_prev;
  std::array<Matrix, 4> gate;  // post-activation i, f, o, g
  Matrix c;
  Matrix tanh_c;
};

using BpttCache = std::vector<LstmStepCache>;

inline std::size_t param_count(const LstmParams& p) noexcept {
  return 4 * (p.size * p.input_dim + p.size * p.size + p.size);
}

inline std::pair<LstmState, LstmStepCache> lstm_cell_forward(const LstmParams& params,
                                                             const Matrix& x,
                                                             const LstmState& prev) {
  const std::size_t n = params.size;
  if (x.rows() != params.input_dim || x.cols() != 1) {
    throw ShapeError("lstm_cell_forward: input " + x.shape() + " expected " +
                     Matrix::shape_string(params.input_dim, 1));
  }
  if (prev.h.rows() != n || prev.h.cols() != 1 || !prev.h.same_shape(prev.c_cell)) {
    throw ShapeError("lstm_cell_forward: state shape does not match size " + std::to_string(n));
  }

  LstmStepCache cache;
  cache.x = x;
  cache.h_prev = prev.h;
  cache.c_prev = prev.c_cell;
  for (std::size_t k = 0; k < 4; ++k) {
    Matrix pre = params.b[k];
    for (std::size_t r = 0; r < n; ++r) {
      pre[r] += dot(params.W[k].row(r), x.data()) + dot(params.U[k].row(r), prev.h.data());
    }
    cache.gate[k] = k == kCell ? tanh_map(pre) : sigmoid_map(pre);
  }

  LstmState next{Matrix(n, 1), Matrix(n, 1)};
  cache.c = Matrix(n, 1);
  cache.tanh_c = Matrix(n, 1);
  for (std::size_t r = 0; r < n; ++r) {
    const double c = cache.gate[kForget][r] * prev.c_cell[r] +
                     cache.gate[kInput][r] * cache.gate[kCell][r];
    cache.c[r] = c;
    cache.tanh_c[r] = std::tanh(c);
    next.c_cell[r] = c;
    next.h[r] = cache.gate[kOutput][r] * cache.tanh_c[r];
  }
  return {std::move(next), std::move(cache)};
}

struct EncodedSequence {
  std::vector<Matrix> annotations;  // one h per timestep
  LstmState final;
  BpttCache cache;
};

/// Runs the encoder over xs from a zero initial state.
inline EncodedSequence encode_sequence(const LstmParams& params, const std::vector<Matrix>& xs) {
  if (xs.empty()) throw ArgumentError("encode_sequence: empty input sequence");
  EncodedSequence out;
  out.annotations.reserve(xs.size());
  out.cache.reserve(xs.size());
  LstmState state = LstmState::zeros(params.size);
  for (const Matrix& x : xs) {
    auto [next, step] = lstm_cell_forward(params, x, state);
    state = std::move(next);
    out.annotations.push_back(state.h);
    out.cache.push_back(std::move(step));
  }
  out.final = std::move(state);
  return out;
}

struct LstmGradients {
  LstmParams params;                // same layout as the forward parameters
  std::vector<Matrix> inputs;       // dL/dx_t
};

/// Backpropagation through time. grad_annotations[t] is dL/dh_t from
/// everything downstream of the encoder.
inline LstmGradients lstm_backward(const LstmParams& params, const BpttCache& cache,
                                   const std::vector<Matrix>& grad_annotations) {
  if (grad_annotations.size() != cache.size()) {
    throw ShapeError("lstm_backward: " + std::to_string(grad_annotations.size()) +
                     " annotation gradients for a cache of length " +
                     std::to_string(cache.size()));
  }
  const std::size_t n = params.size;
  const std::size_t d = params.input_dim;
  LstmGradients grads{LstmParams::zeros(n, d), std::vector<Matrix>(cache.size())};

  Matrix dh_next(n, 1);
  Matrix dc_next(n, 1);
  std::array<Matrix, 4> da;
  for (auto& m : da) m = Matrix(n, 1);

  for (std::size_t t = cache.size(); t-- > 0;) {
    const LstmStepCache& s = cache[t];
    if (!grad_annotations[t].same_shape(dh_next)) {
      throw ShapeError("lstm_backward: annotation gradient " + grad_annotations[t].shape() +
                       " at step " + std::to_string(t));
    }
    const auto& [i, f, o, g] = s.gate;
    for (std::size_t r = 0; r < n; ++r) {
      const double dh = grad_annotations[t][r] + dh_next[r];
      const double dc = dc_next[r] + dh * o[r] * (1.0 - s.tanh_c[r] * s.tanh_c[r]);
      da[kOutput][r] = dh * s.tanh_c[r] * o[r] * (1.0 - o[r]);
      da[kInput][r] = dc * g[r] * i[r] * (1.0 - i[r]);
      da[kForget][r] = dc * s.c_prev[r] * f[r] * (1.0 - f[r]);
      da[kCell][r] = dc * i[r] * (1.0 - g[r] * g[r]);
      dc_next[r] = dc * f[r];
    }

    Matrix dx(d, 1);
    dh_next.fill(0.0);
    for (std::size_t k = 0; k < 4; ++k) {
      for (std::size_t r = 0; r < n; ++r) {
        const double a = da[k][r];
        if (a == 0.0) continue;
        grads.params.b[k][r] += a;
        for (std::size_t c = 0; c < d; ++c) {
          grads.params.W[k](r, c) += a * s.x[c];
          dx[c] += params.W[k](r, c) * a;
        }
        for (std::size_t c = 0; c < n; ++c) {
          grads.params.U[k](r, c) += a * s.h_prev[c];
          dh_next[c] += params.U[k](r, c) * a;
        }
      }
    }
    grads.inputs[t] = std::move(dx);
  }
  return grads;
}

}  // namespace attnfts

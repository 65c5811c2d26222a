#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "attnfts/matrix.hpp"

namespace attnfts {

/// Additive alignment model: e_j = v_a' tanh(W_a s + U_a h_j).
struct AttentionParams {
  std::size_t size = 0;      // encoder width
  std::size_t attn_dim = 0;  // alignment width
  Matrix W_a;                // attn_dim x size, projects the decoder state
  Matrix U_a;                // attn_dim x size, projects each annotation
  Matrix v_a;                // attn_dim x 1

  static AttentionParams zeros(std::size_t size, std::size_t attn_dim) {
    return {size, attn_dim, Matrix(attn_dim, size), Matrix(attn_dim, size), Matrix(attn_dim, 1)};
  }

  static AttentionParams initialized(std::size_t size, std::size_t attn_dim, SeededRng& rng) {
    AttentionParams p = zeros(size, attn_dim);
    p.W_a = xavier_init(attn_dim, size, rng);
    p.U_a = xavier_init(attn_dim, size, rng);
    p.v_a = xavier_init(attn_dim, 1, rng);
    return p;
  }

  void validate() const {
    if (attn_dim == 0) throw ShapeError("attention: attn_dim must be >= 1");
    if (W_a.rows() != attn_dim || W_a.cols() != size || U_a.rows() != attn_dim ||
        U_a.cols() != size || v_a.rows() != attn_dim || v_a.cols() != 1) {
      throw ShapeError("attention: parameter shapes inconsistent with size " +
                       std::to_string(size) + " and attn_dim " + std::to_string(attn_dim));
    }
  }

  std::size_t param_count() const noexcept { return 2 * attn_dim * size + attn_dim; }

  template <typename F>
  void for_each(F&& fn) {
    fn("W_a", W_a);
    fn("U_a", U_a);
    fn("v_a", v_a);
  }

  template <typename F>
  void for_each(F&& fn) const {
    fn("W_a", W_a);
    fn("U_a", U_a);
    fn("v_a", v_a);
  }
};

struct AttentionResult {
  std::vector<double> scores;   // e_j
  std::vector<double> weights;  // alpha_j
  Matrix context;               // sum_j alpha_j h_j
  std::vector<Matrix> hidden;   // tanh(W_a s + U_a h_j), kept for backward
};

namespace detail {

inline void check_vector(const Matrix& m, std::size_t n, const char* what) {
  if (m.rows() != n || m.cols() != 1) {
    throw ShapeError(std::string("attention: ") + what + " " + m.shape() + " expected " +
                     Matrix::shape_string(n, 1));
  }
}

inline Matrix project(const Matrix& w, const Matrix& x) {
  Matrix out(w.rows(), 1);
  for (std::size_t r = 0; r < w.rows(); ++r) out[r] = dot(w.row(r), x.data());
  return out;
}

inline Matrix alignment_hidden(const AttentionParams& params, const Matrix& projected_state,
                               const Matrix& h) {
  Matrix z = project(params.U_a, h);
  for (std::size_t r = 0; r < z.size(); ++r) z[r] = std::tanh(z[r] + projected_state[r]);
  return z;
}

}  // namespace detail

/// Alignment score of a single annotation against the decoder state.
inline double align(const AttentionParams& params, const Matrix& s_prev, const Matrix& h) {
  params.validate();
  detail::check_vector(s_prev, params.size, "decoder state");
  detail::check_vector(h, params.size, "annotation");
  const Matrix hidden = detail::alignment_hidden(params, detail::project(params.W_a, s_prev), h);
  return dot(params.v_a.data(), hidden.data());
}

inline std::vector<double> attention_weights(std::span<const double> scores) {
  return softmax(scores);
}

inline Matrix context_vector(std::span<const double> weights,
                             const std::vector<Matrix>& annotations) {
  if (weights.size() != annotations.size()) {
    throw ShapeError("context_vector: " + std::to_string(weights.size()) + " weights for " +
                     std::to_string(annotations.size()) + " annotations");
  }
  if (annotations.empty()) throw ArgumentError("context_vector: no annotations");
  Matrix context(annotations.front().rows(), 1);
  for (std::size_t j = 0; j < annotations.size(); ++j) {
    if (!annotations[j].same_shape(context)) {
      throw ShapeError("context_vector: annotation " + std::to_string(j) + " has shape " +
                       annotations[j].shape());
    }
    for (std::size_t r = 0; r < context.size(); ++r) context[r] += weights[j] * annotations[j][r];
  }
  return context;
}

/// Scores, weights and context for one decoding step.
inline AttentionResult attend(const AttentionParams& params, const Matrix& s_prev,
                              const std::vector<Matrix>& annotations) {
  params.validate();
  detail::check_vector(s_prev, params.size, "decoder state");
  if (annotations.empty()) throw ArgumentError("attend: no annotations");
  const Matrix projected_state = detail::project(params.W_a, s_prev);
  AttentionResult out;
  out.scores.reserve(annotations.size());
  out.hidden.reserve(annotations.size());
  for (const Matrix& h : annotations) {
    detail::check_vector(h, params.size, "annotation");
    out.hidden.push_back(detail::alignment_hidden(params, projected_state, h));
    out.scores.push_back(dot(params.v_a.data(), out.hidden.back().data()));
  }
  out.weights = attention_weights(out.scores);
  out.context = context_vector(out.weights, annotations);
  return out;
}

struct AttentionGradients {
  AttentionParams params;
  Matrix s_prev;
  std::vector<Matrix> annotations;
};

/// Reverse-mode pass through context, softmax and alignment.
inline AttentionGradients attention_backward(const AttentionParams& params, const Matrix& s_prev,
                                             const std::vector<Matrix>& annotations,
                                             const Matrix& grad_context) {
  const AttentionResult fwd = attend(params, s_prev, annotations);
  detail::check_vector(grad_context, params.size, "context gradient");

  const std::size_t T = annotations.size();
  const std::size_t n = params.size;
  const std::size_t m = params.attn_dim;
  AttentionGradients grads{AttentionParams::zeros(n, m), Matrix(n, 1),
                           std::vector<Matrix>(T, Matrix(n, 1))};

  // d context / d alpha_j = h_j; softmax Jacobian gives d e_j.
  std::vector<double> d_weight(T);
  double weighted = 0.0;
  for (std::size_t j = 0; j < T; ++j) {
    d_weight[j] = dot(grad_context.data(), annotations[j].data());
    weighted += fwd.weights[j] * d_weight[j];
    for (std::size_t r = 0; r < n; ++r) grads.annotations[j][r] += fwd.weights[j] * grad_context[r];
  }

  Matrix dz_total(m, 1);
  for (std::size_t j = 0; j < T; ++j) {
    const double de = fwd.weights[j] * (d_weight[j] - weighted);
    if (de == 0.0) continue;
    const Matrix& hidden = fwd.hidden[j];
    for (std::size_t a = 0; a < m; ++a) {
      grads.params.v_a[a] += de * hidden[a];
      const double dz = de * params.v_a[a] * (1.0 - hidden[a] * hidden[a]);
      dz_total[a] += dz;
      for (std::size_t c = 0; c < n; ++c) {
        grads.params.U_a(a, c) += dz * annotations[j][c];
        grads.annotations[j][c] += params.U_a(a, c) * dz;
      }
    }
  }
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t c = 0; c < n; ++c) {
      grads.params.W_a(a, c) += dz_total[a] * s_prev[c];
      grads.s_prev[c] += params.W_a(a, c) * dz_total[a];
    }
  }
  return grads;
}

}  // namespace attnfts

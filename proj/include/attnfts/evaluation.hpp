#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "attnfts/data.hpp"
#include "attnfts/model.hpp"
#include "attnfts/parallel.hpp"
#include "attnfts/training.hpp"

namespace attnfts {

/// Single chronological cut at floor(train_frac * N).
struct FixedOrigin {
  double train_frac = 0.8;
  friend bool operator==(const FixedOrigin&, const FixedOrigin&) = default;
};

/// Training always starts at 0. Origins o_k = floor(initial_frac * N) + k * stride
/// for k < num_splits; split k validates on [o_k, o_k + stride), and the last
/// split validates on [o_last, N). stride = 0 selects
/// floor((N - o_0) / num_splits), which tiles the tail of the series.
struct RollingOrigin {
  std::size_t num_splits = 5;
  double initial_frac = 0.5;
  std::size_t stride = 0;
  friend bool operator==(const RollingOrigin&, const RollingOrigin&) = default;
};

/// Fixed-length train/validation windows at origins 0, stride, 2*stride, ...
/// as long as the pair fits inside the series.
struct RollingWindow {
  std::size_t train_len = 250;
  std::size_t val_len = 50;
  std::size_t stride = 50;
  friend bool operator==(const RollingWindow&, const RollingWindow&) = default;
};

using SplitPlan = std::variant<FixedOrigin, RollingOrigin, RollingWindow>;

struct Split {
  IndexRange train;
  IndexRange val;
  friend bool operator==(const Split&, const Split&) = default;
};

inline std::string plan_name(const SplitPlan& plan) {
  switch (plan.index()) {
    case 0: return "fixed_origin";
    case 1: return "rolling_origin";
    default: return "rolling_window";
  }
}

inline void validate_plan(const SplitPlan& plan) {
  if (const auto* p = std::get_if<FixedOrigin>(&plan)) {
    if (!(p->train_frac > 0.0 && p->train_frac < 1.0))
      throw ConfigError("fixed_origin: train_frac must be in (0, 1)");
  } else if (const auto* p = std::get_if<RollingOrigin>(&plan)) {
    if (p->num_splits < 1) throw ConfigError("rolling_origin: num_splits must be >= 1");
    if (!(p->initial_frac > 0.0 && p->initial_frac < 1.0))
      throw ConfigError("rolling_origin: initial_frac must be in (0, 1)");
  } else {
    const auto& w = std::get<RollingWindow>(plan);
    if (w.train_len < 1 || w.val_len < 1 || w.stride < 1)
      throw ConfigError("rolling_window: train_len, val_len and stride must be >= 1");
  }
}

namespace detail {

/// floor(frac * n), tolerant of products like 0.29 * 100 = 28.999999999999996.
inline std::size_t floor_frac(double frac, std::size_t n) {
  return static_cast<std::size_t>(std::floor(frac * static_cast<double>(n) + 1e-9));
}

/// Splits for a length-n series, or nullopt if the plan is not realizable.
/// Each training segment must hold at least min_train prices.
inline std::optional<std::vector<Split>> try_plan(const SplitPlan& plan, std::size_t n,
                                                  std::size_t min_train) {
  std::vector<Split> out;
  if (const auto* p = std::get_if<FixedOrigin>(&plan)) {
    const std::size_t cut = floor_frac(p->train_frac, n);
    if (cut < min_train || cut >= n) return std::nullopt;
    out.push_back({{0, cut}, {cut, n}});
  } else if (const auto* p = std::get_if<RollingOrigin>(&plan)) {
    const std::size_t o0 = floor_frac(p->initial_frac, n);
    if (o0 < min_train || o0 >= n) return std::nullopt;
    const std::size_t stride = p->stride > 0 ? p->stride : (n - o0) / p->num_splits;
    if (stride == 0) return std::nullopt;
    for (std::size_t k = 0; k < p->num_splits; ++k) {
      const std::size_t origin = o0 + k * stride;
      if (origin >= n) return std::nullopt;
      const std::size_t end = k + 1 == p->num_splits ? n : origin + stride;
      if (end > n) return std::nullopt;
      out.push_back({{0, origin}, {origin, end}});
    }
  } else {
    const auto& w = std::get<RollingWindow>(plan);
    if (w.train_len < min_train) return std::nullopt;
    for (std::size_t t = 0; t + w.train_len + w.val_len <= n; t += w.stride)
      out.push_back({{t, t + w.train_len}, {t + w.train_len, t + w.train_len + w.val_len}});
    if (out.empty()) return std::nullopt;
  }
  return out;
}

}  // namespace detail

/// Smallest series length the plan accepts, or nullopt if no length works.
inline std::optional<std::size_t> minimum_length(const SplitPlan& plan, std::size_t lag) {
  validate_plan(plan);
  const std::size_t min_train = lag + 2;
  if (const auto* w = std::get_if<RollingWindow>(&plan)) {
    if (w->train_len < min_train) return std::nullopt;
    return w->train_len + w->val_len;
  }
  // Fraction-based plans: realizability is monotone enough in practice that a
  // linear scan is the simplest exact answer.
  for (std::size_t n = min_train + 1; n < 10'000'000; ++n)
    if (detail::try_plan(plan, n, min_train)) return n;
  return std::nullopt;
}

/// Train/validation ranges in price indices. Training segments hold at least
/// lag + 2 prices (so at least one training window exists), validation
/// segments at least one.
inline std::vector<Split> plan_splits(const SplitPlan& plan, std::size_t series_length,
                                      std::size_t lag = 0) {
  validate_plan(plan);
  if (auto splits = detail::try_plan(plan, series_length, lag + 2)) return *splits;
  const auto need = minimum_length(plan, lag);
  std::string msg = plan_name(plan) + ": series of length " + std::to_string(series_length) +
                    " is too short";
  if (need) {
    msg += "; minimum length is " + std::to_string(*need);
  } else if (const auto* w = std::get_if<RollingWindow>(&plan)) {
    msg += "; train_len " + std::to_string(w->train_len) + " must be >= lag+2 = " +
           std::to_string(lag + 2);
  }
  throw PlanError(msg);
}

namespace detail {
inline int sign(double x) noexcept { return (x > 0.0) - (x < 0.0); }
}  // namespace detail

/// Fraction of positions where sign(prediction) == sign(actual), with sign(0) = 0.
inline double up_down_accuracy(std::span<const double> predictions, std::span<const double> actuals) {
  if (predictions.size() != actuals.size())
    throw ArgumentError("up_down_accuracy: " + std::to_string(predictions.size()) +
                        " predictions vs " + std::to_string(actuals.size()) + " actuals");
  if (predictions.empty()) throw ArgumentError("up_down_accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    hits += detail::sign(predictions[i]) == detail::sign(actuals[i]);
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

struct ThresholdedAccuracy {
  std::optional<double> accuracy;  // absent when no prediction clears the threshold
  std::size_t trade_count = 0;
};

/// Up-down accuracy restricted to |prediction| > threshold.
inline ThresholdedAccuracy thresholded_accuracy(std::span<const double> predictions,
                                                std::span<const double> actuals,
                                                double threshold) {
  if (!(threshold >= 0.0)) throw ArgumentError("thresholded_accuracy: threshold must be >= 0");
  if (predictions.size() != actuals.size())
    throw ArgumentError("thresholded_accuracy: length mismatch");
  std::size_t hits = 0;
  ThresholdedAccuracy out;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (!(std::abs(predictions[i]) > threshold)) continue;
    ++out.trade_count;
    hits += detail::sign(predictions[i]) == detail::sign(actuals[i]);
  }
  if (out.trade_count > 0)
    out.accuracy = static_cast<double>(hits) / static_cast<double>(out.trade_count);
  return out;
}

struct EvalOptions {
  std::size_t jobs = 1;
  double threshold = 0.0;             // for the thresholded accuracy column
  std::size_t attention_samples = 3;  // validation windows whose weights are kept
};

struct SplitResult {
  std::size_t index = 0;
  Split split;
  double val_loss = 0.0;           // scaled-space MSE of first-step predictions
  double up_down_accuracy = 0.0;
  ThresholdedAccuracy thresholded;
  std::size_t n_predictions = 0;
  std::size_t epochs_run = 0;
  double final_train_loss = 0.0;
  Scaler scaler;
  // signals[k] = model output minus the scaled value of a zero return; its
  // sign is the predicted direction and its magnitude the confidence.
  std::vector<double> signals;
  std::vector<double> actual_returns;
  std::vector<std::vector<double>> attention_weights;
};

struct EvalReport {
  ModelConfig config;
  TrainConfig train;
  SplitPlan plan;
  double threshold = 0.0;
  std::vector<SplitResult> splits;
  double mean_loss = 0.0;
  double mean_accuracy = 0.0;
};

/// Trains a fresh model on one split and scores one-step-ahead predictions.
inline SplitResult evaluate_split(const ModelConfig& config, const TrainConfig& train_cfg,
                                  const PriceSeries& series, const Split& split,
                                  std::size_t index, const EvalOptions& opts = {}) {
  const SplitData data = prepare_split(series, split.train, split.val, config.lag);
  ModelConfig mc = config;
  mc.seed = derive_seed(config.seed, index);
  TrainConfig tc = train_cfg;
  tc.seed = derive_seed(train_cfg.seed, index);

  Model model = build(mc);
  const LossHistory history = fit(model, data.train, data.val, tc);

  SplitResult r;
  r.index = index;
  r.split = split;
  r.scaler = data.scaler;
  r.epochs_run = history.size();
  r.final_train_loss = history.epochs.back().train_loss;
  const double neutral = data.scaler.transform(0.0);
  std::vector<double> outputs;
  for (std::size_t k = 0; k < data.val.size(); ++k) {
    const Prediction p = forward(model, data.val.windows[k], Mode::Infer);
    outputs.push_back(p.value);
    r.signals.push_back(p.value - neutral);
    if (mc.variant == Variant::Attention && k < opts.attention_samples)
      r.attention_weights.push_back(p.attention_weights);
  }
  r.actual_returns = data.val_raw_returns;
  r.n_predictions = outputs.size();
  r.val_loss = mse(outputs, data.val.targets);
  r.up_down_accuracy = up_down_accuracy(r.signals, r.actual_returns);
  r.thresholded = thresholded_accuracy(r.signals, r.actual_returns, opts.threshold);
  return r;
}

namespace detail {

/// Rethrows the active exception with a prefix, keeping its library error category.
[[noreturn]] inline void rethrow_with_context(std::exception_ptr e, const std::string& prefix) {
  try {
    std::rethrow_exception(e);
  } catch (const ShapeError& x) {
    throw ShapeError(prefix + x.what());
  } catch (const ArgumentError& x) {
    throw ArgumentError(prefix + x.what());
  } catch (const NumericError& x) {
    throw NumericError(prefix + x.what());
  } catch (const ConfigError& x) {
    throw ConfigError(prefix + x.what());
  } catch (const DataError& x) {
    throw DataError(prefix + x.what());
  } catch (const PlanError& x) {
    throw PlanError(prefix + x.what());
  } catch (const TuningError& x) {
    throw TuningError(prefix + x.what());
  }
}

}  // namespace detail

/// Runs every split of the plan with a fresh model each and averages the
/// per-split loss and accuracy. Splits run in parallel; results are
/// assembled by split index.
inline EvalReport evaluate(const ModelConfig& config, const TrainConfig& train_cfg,
                           const PriceSeries& series, const SplitPlan& plan,
                           const EvalOptions& opts = {}) {
  config.validate();
  train_cfg.validate();
  const std::vector<Split> splits = plan_splits(plan, series.size(), config.lag);

  EvalReport report{config, train_cfg, plan, opts.threshold, {}, 0.0, 0.0};
  report.splits.resize(splits.size());
  std::vector<std::exception_ptr> failures(splits.size());
  parallel_for(splits.size(), opts.jobs, [&](std::size_t k) {
    try {
      report.splits[k] = evaluate_split(config, train_cfg, series, splits[k], k, opts);
    } catch (...) {
      failures[k] = std::current_exception();
    }
  });
  for (std::size_t k = 0; k < failures.size(); ++k)
    if (failures[k]) detail::rethrow_with_context(failures[k], "split " + std::to_string(k) + ": ");

  for (const SplitResult& s : report.splits) {
    report.mean_loss += s.val_loss;
    report.mean_accuracy += s.up_down_accuracy;
  }
  report.mean_loss /= static_cast<double>(report.splits.size());
  report.mean_accuracy /= static_cast<double>(report.splits.size());
  return report;
}

struct SampleSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double stddev = 0.0;     // sample standard deviation
  double ci95_half = 0.0;  // 1.96 * stddev / sqrt(n)
};

inline SampleSummary summarize(std::span<const double> xs) {
  SampleSummary s;
  s.n = xs.size();
  if (s.n == 0) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(s.n - 1));
    s.ci95_half = 1.96 * s.stddev / std::sqrt(static_cast<double>(s.n));
  }
  return s;
}

struct VariantSummary {
  Variant variant = Variant::Plain;
  std::vector<double> losses;      // one per series
  std::vector<double> accuracies;  // one per series
  SampleSummary loss;
  SampleSummary accuracy;
};

/// Side-by-side comparison of the two variants over a set of series.
struct Comparison {
  VariantSummary plain;
  VariantSummary attention;
  Variant accuracy_winner = Variant::Plain;
  Variant loss_winner = Variant::Plain;
  bool accuracy_separated = false;  // 95% intervals do not overlap
  bool loss_separated = false;
};

inline Comparison compare_variants(const std::vector<PriceSeries>& series,
                                   const ModelConfig& plain_cfg, const ModelConfig& attention_cfg,
                                   const TrainConfig& plain_train,
                                   const TrainConfig& attention_train, const SplitPlan& plan,
                                   std::size_t jobs = 1) {
  if (series.empty()) throw ArgumentError("compare_variants: no series");
  if (plain_cfg.variant != Variant::Plain || attention_cfg.variant != Variant::Attention)
    throw ConfigError("compare_variants: expected one plain and one attention config");

  const std::size_t n = series.size();
  std::vector<EvalReport> reports(2 * n);
  parallel_for(2 * n, jobs, [&](std::size_t job) {
    const bool attn = job >= n;
    const std::size_t s = job % n;
    reports[job] = evaluate(attn ? attention_cfg : plain_cfg, attn ? attention_train : plain_train,
                            series[s], plan);
  });

  Comparison c;
  c.plain.variant = Variant::Plain;
  c.attention.variant = Variant::Attention;
  for (std::size_t job = 0; job < 2 * n; ++job) {
    VariantSummary& v = job < n ? c.plain : c.attention;
    v.losses.push_back(reports[job].mean_loss);
    v.accuracies.push_back(reports[job].mean_accuracy);
  }
  for (VariantSummary* v : {&c.plain, &c.attention}) {
    v->loss = summarize(v->losses);
    v->accuracy = summarize(v->accuracies);
  }
  c.accuracy_winner =
      c.attention.accuracy.mean > c.plain.accuracy.mean ? Variant::Attention : Variant::Plain;
  c.loss_winner = c.attention.loss.mean < c.plain.loss.mean ? Variant::Attention : Variant::Plain;
  const auto separated = [](const SampleSummary& a, const SampleSummary& b) {
    return a.mean + a.ci95_half < b.mean - b.ci95_half ||
           b.mean + b.ci95_half < a.mean - a.ci95_half;
  };
  c.accuracy_separated = separated(c.plain.accuracy, c.attention.accuracy);
  c.loss_separated = separated(c.plain.loss, c.attention.loss);
  return c;
}

}  // namespace attnfts

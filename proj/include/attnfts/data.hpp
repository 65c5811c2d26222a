#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "attnfts/errors.hpp"
#include "attnfts/matrix.hpp"
#include "attnfts/rng.hpp"

namespace attnfts {

/// Dated daily closes. Dates are ISO-8601 (YYYY-MM-DD) strings, which sort
/// chronologically as text.
struct PriceSeries {
  std::string name;
  std::vector<std::string> dates;
  std::vector<double> closes;

  std::size_t size() const noexcept { return closes.size(); }

  void validate() const {
    if (dates.size() != closes.size())
      throw DataError("price series '" + name + "': dates and closes differ in length");
    for (std::size_t i = 0; i < closes.size(); ++i) {
      if (!(closes[i] > 0.0) || !std::isfinite(closes[i]))
        throw DataError("price series '" + name + "': non-positive close at index " +
                        std::to_string(i));
      if (i > 0 && !(dates[i - 1] < dates[i]))
        throw DataError("price series '" + name + "': dates not strictly increasing at index " +
                        std::to_string(i));
    }
  }
};

namespace detail {

inline bool valid_iso_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  const char* b = s.data();
  if (std::from_chars(b, b + 4, y).ptr != b + 4) return false;
  if (std::from_chars(b + 5, b + 7, m).ptr != b + 7) return false;
  if (std::from_chars(b + 8, b + 10, d).ptr != b + 10) return false;
  return std::chrono::year_month_day{std::chrono::year{y}, std::chrono::month{m},
                                     std::chrono::day{d}}
      .ok();
}

inline std::string format_date(std::chrono::sys_days day) {
  const std::chrono::year_month_day ymd{day};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

}  // namespace detail

/// Shortest decimal text that round-trips to the same double.
inline std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

/// Parses a `date,close` CSV. Rows are sorted by date; duplicates rejected.
inline PriceSeries parse_price_csv(std::istream& in, std::string name) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw DataError(name + ": empty file, expected header 'date,close'");
  ++line_no;
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM
  if (detail::trim(line) != "date,close")
    throw DataError(name + ":1: expected header 'date,close'");

  std::vector<std::pair<std::string, std::pair<double, std::size_t>>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = detail::trim(line);
    if (row.empty()) continue;
    const auto where = name + ":" + std::to_string(line_no) + ": ";
    const auto comma = row.find(',');
    if (comma == std::string_view::npos || row.find(',', comma + 1) != std::string_view::npos)
      throw DataError(where + "malformed row, expected 'date,close'");
    const std::string_view date = detail::trim(row.substr(0, comma));
    const std::string_view close_text = detail::trim(row.substr(comma + 1));
    if (!detail::valid_iso_date(date)) throw DataError(where + "invalid date '" + std::string(date) + "'");
    double close = 0.0;
    const auto res = std::from_chars(close_text.data(), close_text.data() + close_text.size(), close);
    if (res.ec != std::errc{} || res.ptr != close_text.data() + close_text.size() ||
        !std::isfinite(close))
      throw DataError(where + "invalid close '" + std::string(close_text) + "'");
    if (!(close > 0.0)) throw DataError(where + "non-positive close " + std::string(close_text));
    rows.push_back({std::string(date), {close, line_no}});
  }

  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  PriceSeries series;
  series.name = std::move(name);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0 && rows[i].first == rows[i - 1].first)
      throw DataError(series.name + ":" + std::to_string(rows[i].second.second) +
                      ": duplicate date " + rows[i].first);
    series.dates.push_back(rows[i].first);
    series.closes.push_back(rows[i].second.first);
  }
  return series;
}

inline PriceSeries load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open price file " + path.string());
  return parse_price_csv(in, path.string());
}

inline void write_csv(const PriceSeries& series, std::ostream& out) {
  out << "date,close\n";
  for (std::size_t i = 0; i < series.size(); ++i)
    out << series.dates[i] << ',' << format_double(series.closes[i]) << '\n';
}

inline void save_csv(const PriceSeries& series, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_csv(series, out);
}

/// Simple returns r_t = (p_t - p_{t-1}) / p_{t-1}.
inline std::vector<double> to_returns(std::span<const double> prices) {
  if (prices.size() < 2) throw ArgumentError("to_returns: need at least 2 prices");
  std::vector<double> r(prices.size() - 1);
  for (std::size_t t = 1; t < prices.size(); ++t) r[t - 1] = (prices[t] - prices[t - 1]) / prices[t - 1];
  return r;
}

inline std::vector<double> to_returns(const PriceSeries& series) { return to_returns(series.closes); }

/// Inverse of to_returns given the first price.
inline std::vector<double> compound(double base, std::span<const double> returns) {
  std::vector<double> p{base};
  p.reserve(returns.size() + 1);
  for (double r : returns) p.push_back(p.back() * (1.0 + r));
  return p;
}

/// Affine map of [min, max] onto [-1, 1]. Values outside the fitted range
/// map outside [-1, 1]; nothing is clipped.
struct Scaler {
  double min = 0.0;
  double max = 0.0;

  double transform(double x) const noexcept { return 2.0 * (x - min) / (max - min) - 1.0; }
  double inverse(double y) const noexcept { return (y + 1.0) * 0.5 * (max - min) + min; }

  friend bool operator==(const Scaler&, const Scaler&) = default;
};

inline Scaler fit_scaler(std::span<const double> train_returns) {
  if (train_returns.empty()) throw ArgumentError("fit_scaler: empty training slice");
  const auto [lo, hi] = std::minmax_element(train_returns.begin(), train_returns.end());
  if (!(*lo < *hi)) throw DataError("fit_scaler: degenerate range (all training returns equal)");
  return {*lo, *hi};
}

inline std::vector<double> apply_scaler(const Scaler& scaler, std::span<const double> values) {
  std::vector<double> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(),
                 [&](double x) { return scaler.transform(x); });
  return out;
}

/// Supervised samples: window k covers [k, k+lag), target is index k+lag.
/// origin_indices[k] is that target index in the source sequence, after
/// adding the offset passed to make_windows.
struct WindowSet {
  std::size_t lag = 0;
  std::vector<Matrix> windows;  // lag x 1
  std::vector<double> targets;
  std::vector<std::size_t> origin_indices;

  std::size_t size() const noexcept { return targets.size(); }
  bool empty() const noexcept { return targets.empty(); }
};

inline WindowSet make_windows(std::span<const double> values, std::size_t lag,
                              std::size_t index_offset = 0) {
  if (lag < 1) throw ArgumentError("make_windows: lag must be >= 1");
  if (values.size() < lag + 1)
    throw ArgumentError("make_windows: need at least lag+1 = " + std::to_string(lag + 1) +
                        " values, got " + std::to_string(values.size()));
  WindowSet ws;
  ws.lag = lag;
  const std::size_t n = values.size() - lag;
  ws.windows.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    ws.windows.push_back(Matrix::column(values.subspan(k, lag)));
    ws.targets.push_back(values[k + lag]);
    ws.origin_indices.push_back(index_offset + k + lag);
  }
  return ws;
}

enum class SyntheticKind { Sine, RandomWalk, AR1 };

inline std::string_view to_string(SyntheticKind k) noexcept {
  switch (k) {
    case SyntheticKind::Sine: return "sine";
    case SyntheticKind::RandomWalk: return "random_walk";
    case SyntheticKind::AR1: return "ar1";
  }
  return "?";
}

inline SyntheticKind parse_synthetic_kind(std::string_view s) {
  if (s == "sine") return SyntheticKind::Sine;
  if (s == "random_walk") return SyntheticKind::RandomWalk;
  if (s == "ar1") return SyntheticKind::AR1;
  throw ConfigError("unknown synthetic kind '" + std::string(s) +
                    "' (expected sine|random_walk|ar1)");
}

struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::RandomWalk;
  std::size_t length = 500;
  double noise_std = 0.01;
  double ar_coefficient = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    std::string problems;
    if (length < 64) problems += " length must be >= 64;";
    if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) problems += " noise_std must be >= 0;";
    if (!(std::abs(ar_coefficient) < 1.0)) problems += " |ar_coefficient| must be < 1;";
    if (!problems.empty()) {
      problems.pop_back();
      throw ConfigError("invalid synthetic spec:" + problems);
    }
  }
};

/// Generates a synthetic daily series starting 2000-01-01, one calendar day per step.
///   Sine:       p_t = 100 + 10 sin(2 pi t / 20) + noise_std * N(0,1)
///   RandomWalk: p_0 = 100, p_t = p_{t-1} (1 + eps_t), eps ~ N(0, noise_std)
///   AR1:        r_t = phi r_{t-1} + eps_t, r_0 = eps_0, prices compounded from 100
inline PriceSeries synthesize(const SyntheticSpec& spec) {
  spec.validate();
  SeededRng rng(spec.seed);
  PriceSeries s;
  s.name = std::string(to_string(spec.kind));
  s.closes.reserve(spec.length);
  switch (spec.kind) {
    case SyntheticKind::Sine:
      for (std::size_t t = 0; t < spec.length; ++t) {
        const double phase = 2.0 * std::numbers::pi * static_cast<double>(t % 20) / 20.0;
        const double noise = spec.noise_std > 0.0 ? spec.noise_std * rng.normal() : 0.0;
        s.closes.push_back(100.0 + 10.0 * std::sin(phase) + noise);
      }
      break;
    case SyntheticKind::RandomWalk:
      s.closes.push_back(100.0);
      for (std::size_t t = 1; t < spec.length; ++t)
        s.closes.push_back(s.closes.back() * (1.0 + spec.noise_std * rng.normal()));
      break;
    case SyntheticKind::AR1: {
      s.closes.push_back(100.0);
      double r = 0.0;
      for (std::size_t t = 1; t < spec.length; ++t) {
        r = spec.ar_coefficient * r + spec.noise_std * rng.normal();
        s.closes.push_back(s.closes.back() * (1.0 + r));
      }
      break;
    }
  }
  for (double p : s.closes) {
    if (!(p > 0.0) || !std::isfinite(p))
      throw ConfigError("synthetic spec produced a non-positive price; reduce noise_std");
  }
  const std::chrono::sys_days start{std::chrono::year{2000} / std::chrono::January / 1};
  s.dates.reserve(spec.length);
  for (std::size_t t = 0; t < spec.length; ++t)
    s.dates.push_back(detail::format_date(start + std::chrono::days{static_cast<long>(t)}));
  return s;
}

/// Population standard deviation of returns over each trailing window.
/// Output length is len(returns) - window + 1.
inline std::vector<double> rolling_volatility(const PriceSeries& series, std::size_t window = 20) {
  if (window < 1) throw ArgumentError("rolling_volatility: window must be >= 1");
  if (series.size() < window + 1)
    throw ArgumentError("rolling_volatility: need at least " + std::to_string(window + 1) +
                        " prices, got " + std::to_string(series.size()));
  const std::vector<double> r = to_returns(series);
  std::vector<double> vol;
  vol.reserve(r.size() - window + 1);
  for (std::size_t end = window; end <= r.size(); ++end) {
    double mean = 0.0;
    for (std::size_t i = end - window; i < end; ++i) mean += r[i];
    mean /= static_cast<double>(window);
    double ss = 0.0;
    for (std::size_t i = end - window; i < end; ++i) ss += (r[i] - mean) * (r[i] - mean);
    vol.push_back(std::sqrt(ss / static_cast<double>(window)));
  }
  return vol;
}

/// Half-open range of price indices.
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
  friend auto operator<=>(const IndexRange&, const IndexRange&) = default;
};

/// Train and validation samples for one chronological split of a price series.
///
/// Returns are indexed by the price they end on: r_t = p_t / p_{t-1} - 1.
/// Training uses only prices in `train`, so the scaler and every training
/// window depend on nothing at or after train.end. Validation targets are the
/// returns r_t for t in `val`; their inputs are the lag returns before t, which
/// may reach back into the training period.
struct SplitData {
  Scaler scaler;
  WindowSet train;
  WindowSet val;
  std::vector<double> val_raw_returns;  // unscaled targets, aligned with val
};

inline SplitData prepare_split(const PriceSeries& series, IndexRange train, IndexRange val,
                               std::size_t lag) {
  if (train.end > val.begin || val.end > series.size() || val.size() == 0)
    throw ArgumentError("prepare_split: invalid ranges for a series of length " +
                        std::to_string(series.size()));
  if (train.size() < lag + 2)
    throw ArgumentError("prepare_split: training segment of " + std::to_string(train.size()) +
                        " prices is shorter than lag+2 = " + std::to_string(lag + 2));

  const std::span<const double> closes(series.closes);
  const std::vector<double> train_returns = to_returns(closes.subspan(train.begin, train.size()));
  SplitData out;
  out.scaler = fit_scaler(train_returns);
  // Return j of train_returns ends on price train.begin + j + 1.
  out.train = make_windows(apply_scaler(out.scaler, train_returns), lag, train.begin + 1);

  // val.begin >= train.begin + lag + 2, so this never underflows.
  const std::size_t first = val.begin - lag - 1;  // price that starts the first input return
  const std::vector<double> val_returns = to_returns(closes.subspan(first, val.end - first));
  out.val = make_windows(apply_scaler(out.scaler, val_returns), lag, first + 1);
  out.val_raw_returns.assign(val_returns.begin() + static_cast<std::ptrdiff_t>(lag),
                             val_returns.end());
  return out;
}

}  // namespace attnfts

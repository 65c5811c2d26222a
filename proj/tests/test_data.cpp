#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>
#include <sstream>

#include "attnfts/data.hpp"

namespace attnfts {
namespace {

PriceSeries parse(const std::string& text) {
  std::istringstream in(text);
  return parse_price_csv(in, "test.csv");
}

std::string data_error(const std::string& text) {
  try {
    parse(text);
  } catch (const DataError& e) {
    return e.what();
  }
  return {};
}

TEST(PriceCsv, ThreeValidRows) {
  const PriceSeries s = parse("date,close\n2020-01-02,10\n2020-01-03,10.5\n2020-01-06,9.75\n");
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s.dates[2], "2020-01-06");
  EXPECT_EQ(s.closes[1], 10.5);
  EXPECT_NO_THROW(s.validate());
}

TEST(PriceCsv, OutOfOrderRowsAreSorted) {
  const PriceSeries s = parse("date,close\n2020-01-06,3\n2020-01-02,1\n2020-01-03,2\n");
  EXPECT_EQ(s.dates, (std::vector<std::string>{"2020-01-02", "2020-01-03", "2020-01-06"}));
  EXPECT_EQ(s.closes, (std::vector<double>{1, 2, 3}));
}

TEST(PriceCsv, ZeroCloseNamesTheLine) {
  const std::string msg = data_error("date,close\n2020-01-02,1\n2020-01-03,0\n");
  EXPECT_NE(msg.find("test.csv:3"), std::string::npos) << msg;
}

TEST(PriceCsv, MalformedRowsRejectedWithLineNumber) {
  EXPECT_NE(data_error("date,close\n2020-01-02,1,2\n").find(":2:"), std::string::npos);
  EXPECT_NE(data_error("date,close\n2020-13-02,1\n").find(":2:"), std::string::npos);
  EXPECT_NE(data_error("date,close\n2020-01-02,abc\n").find(":2:"), std::string::npos);
  EXPECT_NE(data_error("date,close\n2020-01-02\n").find(":2:"), std::string::npos);
  EXPECT_FALSE(data_error("day,price\n2020-01-02,1\n").empty());
  EXPECT_FALSE(data_error("").empty());
}

TEST(PriceCsv, DuplicateDateRejected) {
  EXPECT_NE(data_error("date,close\n2020-01-02,1\n2020-01-02,2\n").find("duplicate"),
            std::string::npos);
}

TEST(PriceCsv, MissingFileIsDataError) {
  EXPECT_THROW(load_csv("/nonexistent/prices.csv"), DataError);
}

TEST(PriceCsv, WriteThenLoadRoundTrips) {
  SyntheticSpec spec;
  spec.length = 80;
  spec.seed = 4;
  const PriceSeries s = synthesize(spec);
  const auto path = std::filesystem::temp_directory_path() / "attnfts_roundtrip.csv";
  save_csv(s, path);
  const PriceSeries back = load_csv(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.dates, s.dates);
  EXPECT_EQ(back.closes, s.closes);
}

TEST(Returns, HandComputedCases) {
  EXPECT_EQ(to_returns(std::vector<double>{5, 5, 5}), (std::vector<double>{0, 0}));
  const auto one = to_returns(std::vector<double>{100, 110});
  ASSERT_EQ(one.size(), 1u);
  EXPECT_NEAR(one[0], 0.10, 1e-15);
  const auto two = to_returns(std::vector<double>{100, 110, 99});
  ASSERT_EQ(two.size(), 2u);
  EXPECT_NEAR(two[0], 0.10, 1e-15);
  EXPECT_NEAR(two[1], -0.10, 1e-15);
  EXPECT_THROW(to_returns(std::vector<double>{1}), ArgumentError);
}

TEST(Returns, CompoundReconstructsPrices) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SyntheticSpec spec;
    spec.length = 300;
    spec.noise_std = 0.03;
    spec.seed = seed;
    const PriceSeries s = synthesize(spec);
    const auto back = compound(s.closes.front(), to_returns(s));
    ASSERT_EQ(back.size(), s.size());
    for (std::size_t i = 0; i < s.size(); ++i)
      EXPECT_LE(std::abs(back[i] - s.closes[i]) / s.closes[i], 1e-10);
  }
}

TEST(Scaler, EndpointsAndMidpoint) {
  const Scaler sc = fit_scaler(std::vector<double>{-0.1, 0.05, 0.1});
  EXPECT_DOUBLE_EQ(sc.transform(0.1), 1.0);
  EXPECT_DOUBLE_EQ(sc.transform(-0.1), -1.0);
  EXPECT_NEAR(sc.transform(0.0), 0.0, 1e-15);
  EXPECT_NEAR(sc.inverse(sc.transform(0.037)), 0.037, 1e-15);
}

TEST(Scaler, ValuesOutsideTrainingRangeAreNotClipped) {
  const Scaler sc = fit_scaler(std::vector<double>{-0.1, 0.1});
  EXPECT_NEAR(sc.transform(0.2), 2.0, 1e-12);
  EXPECT_NEAR(apply_scaler(sc, std::vector<double>{-0.3})[0], -3.0, 1e-12);
}

TEST(Scaler, DegenerateRangeRejected) {
  EXPECT_THROW(fit_scaler(std::vector<double>{0.01, 0.01, 0.01}), DataError);
  EXPECT_THROW(fit_scaler(std::vector<double>{}), ArgumentError);
}

TEST(Windows, CountAndBoundary) {
  std::vector<double> v(10);
  std::iota(v.begin(), v.end(), 0.0);
  EXPECT_EQ(make_windows(v, 3).size(), 7u);
  EXPECT_EQ(make_windows(v, 9).size(), 1u);
  EXPECT_THROW(make_windows(v, 10), ArgumentError);
  EXPECT_THROW(make_windows(v, 0), ArgumentError);
}

TEST(Windows, MatchBruteForceEnumeration) {
  for (std::size_t len = 2; len <= 50; ++len) {
    std::vector<double> v(len);
    for (std::size_t i = 0; i < len; ++i) v[i] = static_cast<double>(i);
    for (std::size_t lag = 1; lag <= 10 && lag < len; ++lag) {
      const WindowSet ws = make_windows(v, lag, 5);
      std::size_t k = 0;
      for (std::size_t target = 0; target < len; ++target) {
        if (target < lag) continue;
        ASSERT_LT(k, ws.size());
        EXPECT_EQ(ws.targets[k], v[target]);
        EXPECT_EQ(ws.origin_indices[k], target + 5);
        ASSERT_EQ(ws.windows[k].rows(), lag);
        for (std::size_t j = 0; j < lag; ++j) {
          const double used = ws.windows[k][j];
          EXPECT_EQ(used, v[target - lag + j]);
          EXPECT_LT(used, ws.targets[k]);
        }
        ++k;
      }
      EXPECT_EQ(k, ws.size()) << "len " << len << " lag " << lag;
    }
  }
}

TEST(Synthesize, SameSpecGivesSameSeries) {
  for (SyntheticKind kind : {SyntheticKind::Sine, SyntheticKind::RandomWalk, SyntheticKind::AR1}) {
    SyntheticSpec spec;
    spec.kind = kind;
    spec.ar_coefficient = 0.5;
    spec.seed = 17;
    const PriceSeries a = synthesize(spec);
    const PriceSeries b = synthesize(spec);
    EXPECT_EQ(a.closes, b.closes);
    EXPECT_EQ(a.dates, b.dates);
    EXPECT_NO_THROW(a.validate());
    EXPECT_EQ(a.size(), spec.length);
  }
}

TEST(Synthesize, DifferentSeedsDiffer) {
  SyntheticSpec a, b;
  a.seed = 1;
  b.seed = 2;
  EXPECT_NE(synthesize(a).closes, synthesize(b).closes);
}

TEST(Synthesize, NoiselessSineIsPeriodic) {
  SyntheticSpec spec;
  spec.kind = SyntheticKind::Sine;
  spec.noise_std = 0.0;
  spec.length = 200;
  const PriceSeries s = synthesize(spec);
  for (std::size_t t = 20; t < s.size(); ++t) EXPECT_EQ(s.closes[t], s.closes[t - 20]);
  EXPECT_DOUBLE_EQ(s.closes[0], 100.0);
  EXPECT_NEAR(s.closes[5], 110.0, 1e-12);
}

TEST(Synthesize, DatesStartAtMillenniumDaily) {
  SyntheticSpec spec;
  spec.length = 64;
  const PriceSeries s = synthesize(spec);
  EXPECT_EQ(s.dates[0], "2000-01-01");
  EXPECT_EQ(s.dates[31], "2000-02-01");
  EXPECT_EQ(s.dates[63], "2000-03-04");
}

TEST(Synthesize, WhiteNoiseReturnsAreUncorrelated) {
  SyntheticSpec spec;
  spec.kind = SyntheticKind::AR1;
  spec.ar_coefficient = 0.0;
  spec.length = 5000;
  spec.seed = 23;
  const std::vector<double> r = to_returns(synthesize(spec));
  const double n = static_cast<double>(r.size());
  double mean = 0.0;
  for (double x : r) mean += x;
  mean /= n;
  double num = 0.0, den = 0.0;
  for (std::size_t t = 0; t < r.size(); ++t) {
    den += (r[t] - mean) * (r[t] - mean);
    if (t > 0) num += (r[t] - mean) * (r[t - 1] - mean);
  }
  EXPECT_LT(std::abs(num / den), 3.0 / std::sqrt(n));
}

TEST(Synthesize, AutoregressiveReturnsAreCorrelated) {
  SyntheticSpec spec;
  spec.kind = SyntheticKind::AR1;
  spec.ar_coefficient = 0.5;
  spec.length = 5000;
  spec.seed = 29;
  const std::vector<double> r = to_returns(synthesize(spec));
  double num = 0.0, den = 0.0;
  for (std::size_t t = 0; t < r.size(); ++t) {
    den += r[t] * r[t];
    if (t > 0) num += r[t] * r[t - 1];
  }
  EXPECT_NEAR(num / den, 0.5, 0.05);
}

TEST(Synthesize, InvalidSpecIsConfigError) {
  SyntheticSpec spec;
  spec.length = 63;
  EXPECT_THROW(synthesize(spec), ConfigError);
  spec.length = 64;
  spec.noise_std = -1.0;
  EXPECT_THROW(synthesize(spec), ConfigError);
  spec.noise_std = 0.01;
  spec.ar_coefficient = 1.0;
  EXPECT_THROW(synthesize(spec), ConfigError);
}

PriceSeries from_closes(std::vector<double> closes) {
  PriceSeries s;
  s.closes = std::move(closes);
  for (std::size_t i = 0; i < s.closes.size(); ++i) s.dates.push_back(std::to_string(1000 + i));
  return s;
}

TEST(Volatility, ConstantPricesGiveZero) {
  const auto vol = rolling_volatility(from_closes(std::vector<double>(30, 50.0)));
  EXPECT_EQ(vol.size(), 29u - 20u + 1u);
  for (double v : vol) EXPECT_EQ(v, 0.0);
}

TEST(Volatility, AlternatingReturnsGiveOnePercent) {
  std::vector<double> closes{100.0};
  for (int t = 0; t < 60; ++t) closes.push_back(closes.back() * (t % 2 == 0 ? 1.01 : 0.99));
  const auto vol = rolling_volatility(from_closes(closes));
  EXPECT_EQ(vol.size(), 60u - 20u + 1u);
  for (double v : vol) EXPECT_NEAR(v, 0.01, 1e-12);
}

TEST(Volatility, ShortSeriesRejected) {
  EXPECT_THROW(rolling_volatility(from_closes(std::vector<double>(20, 1.0))), ArgumentError);
}

TEST(PrepareSplit, ValidationInputsEndBeforeTheirTargets) {
  SyntheticSpec spec;
  spec.length = 120;
  spec.seed = 31;
  const PriceSeries s = synthesize(spec);
  const std::size_t lag = 5;
  const SplitData d = prepare_split(s, {0, 90}, {90, 120}, lag);
  EXPECT_EQ(d.train.size(), 90u - 1u - lag);
  EXPECT_EQ(d.val.size(), 30u);
  EXPECT_EQ(d.val_raw_returns.size(), 30u);
  const auto r = to_returns(s);
  for (std::size_t k = 0; k < d.val.size(); ++k) {
    const std::size_t t = d.val.origin_indices[k];
    EXPECT_EQ(t, 90 + k);
    EXPECT_EQ(d.val_raw_returns[k], r[t - 1]);
    EXPECT_EQ(d.val.targets[k], d.scaler.transform(r[t - 1]));
  }
  for (std::size_t k = 0; k < d.train.size(); ++k) EXPECT_LT(d.train.origin_indices[k], 90u);
}

TEST(PrepareSplit, TrainingSegmentTooShortRejected) {
  SyntheticSpec spec;
  spec.length = 64;
  const PriceSeries s = synthesize(spec);
  EXPECT_THROW(prepare_split(s, {0, 6}, {6, 20}, 5), ArgumentError);
  EXPECT_NO_THROW(prepare_split(s, {0, 7}, {7, 20}, 5));
}

TEST(LookAheadGuard, ValidationPricesDoNotReachTraining) {
  SyntheticSpec spec;
  spec.length = 100;
  spec.noise_std = 0.02;
  spec.seed = 37;
  const PriceSeries base = synthesize(spec);
  const IndexRange train{10, 70}, val{70, 90};
  const SplitData ref = prepare_split(base, train, val, 8);
  for (std::size_t i = train.end; i < base.size(); ++i) {
    for (double factor : {0.5, 3.0}) {
      PriceSeries mutated = base;
      mutated.closes[i] *= factor;
      const SplitData d = prepare_split(mutated, train, val, 8);
      ASSERT_EQ(d.scaler, ref.scaler) << "price " << i;
      ASSERT_EQ(d.train.windows, ref.train.windows) << "price " << i;
      ASSERT_EQ(d.train.targets, ref.train.targets) << "price " << i;
    }
  }
}

}  // namespace
}  // namespace attnfts

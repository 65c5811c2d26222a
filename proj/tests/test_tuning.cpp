#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "attnfts/tuning.hpp"

namespace attnfts {
namespace {

CellResult cell(std::size_t size, std::size_t lag, double dropout, double loss) {
  CellResult c;
  c.size = size;
  c.lag = lag;
  c.dropout = dropout;
  c.val_loss = loss;
  return c;
}

PriceSeries series(std::size_t length = 150) {
  SyntheticSpec spec;
  spec.kind = SyntheticKind::AR1;
  spec.ar_coefficient = 0.5;
  spec.length = length;
  spec.seed = 12;
  return synthesize(spec);
}

TrainConfig quick() {
  TrainConfig t;
  t.max_epochs = 2;
  t.seed = 5;
  return t;
}

TEST(Grid, DefaultsHaveSixtyCells) {
  const Grid g;
  EXPECT_EQ(g.cell_count(), 60u);
  EXPECT_NO_THROW(g.validate());
}

TEST(Grid, ReportedOptimaAreRepresentable) {
  const Grid g;
  const auto has = [](const auto& v, auto x) { return std::find(v.begin(), v.end(), x) != v.end(); };
  EXPECT_TRUE(has(g.sizes, 64u) && has(g.lags, 15u) && has(g.dropouts, 0.1));
  EXPECT_TRUE(has(g.sizes, 16u) && has(g.lags, 60u) && has(g.dropouts, 0.05));
}

TEST(Grid, InvalidValuesRejected) {
  Grid g;
  g.lags = {1};
  EXPECT_THROW(g.validate(), ConfigError);
  g = Grid{};
  g.dropouts = {1.0};
  EXPECT_THROW(g.validate(), ConfigError);
  g = Grid{};
  g.sizes.clear();
  EXPECT_THROW(g.validate(), ConfigError);
}

TEST(SelectBest, UniqueMinimum) {
  const std::vector<CellResult> r{cell(16, 5, 0.0, 0.3), cell(32, 5, 0.0, 0.1), cell(64, 5, 0.0, 0.2)};
  EXPECT_EQ(select_best(r).size, 32u);
}

TEST(SelectBest, TiesPreferSmallerSizeThenLagThenDropout) {
  std::vector<CellResult> r{cell(64, 5, 0.0, 0.1), cell(16, 5, 0.0, 0.1)};
  EXPECT_EQ(select_best(r).size, 16u);
  r = {cell(16, 30, 0.0, 0.1), cell(16, 15, 0.2, 0.1)};
  EXPECT_EQ(select_best(r).lag, 15u);
  r = {cell(16, 15, 0.2, 0.1), cell(16, 15, 0.05, 0.1)};
  EXPECT_EQ(select_best(r).dropout, 0.05);
}

TEST(SelectBest, PermutationInvariant) {
  SeededRng rng(4);
  std::vector<CellResult> r;
  for (std::size_t s : {16, 32, 64})
    for (std::size_t l : {5, 15})
      for (double d : {0.0, 0.1}) r.push_back(cell(s, l, d, 0.1 * static_cast<double>(rng.index(3))));
  const CellResult ref = select_best(r);
  for (int trial = 0; trial < 50; ++trial) {
    rng.shuffle(std::span<CellResult>(r));
    const CellResult b = select_best(r);
    EXPECT_EQ(std::tie(b.size, b.lag, b.dropout, b.val_loss),
              std::tie(ref.size, ref.lag, ref.dropout, ref.val_loss));
  }
}

TEST(SelectBest, FailedCellsSkippedAndAllFailedIsError) {
  std::vector<CellResult> r{cell(16, 5, 0.0, 0.0), cell(32, 5, 0.0, 0.5)};
  r[0].failed = true;
  EXPECT_EQ(select_best(r).size, 32u);
  r[1].failed = true;
  EXPECT_THROW(select_best(r), TuningError);
}

TEST(GridSearch, SingleCellIsBest) {
  Grid g;
  g.sizes = {4};
  g.lags = {5};
  g.dropouts = {0.1};
  ModelConfig base;
  base.seed = 3;
  const TuneResult r = grid_search(g, base, quick(), series(), FixedOrigin{});
  ASSERT_EQ(r.cells.size(), 1u);
  EXPECT_EQ(r.best.size, 4u);
  EXPECT_EQ(r.best.val_loss, r.cells[0].val_loss);
  EXPECT_EQ(r.cells[0].epochs, 2u);
}

TEST(GridSearch, RecordsEveryCellInOrderAndFailedCells) {
  Grid g;
  g.sizes = {2, 3};
  g.lags = {4, 200};
  g.dropouts = {0.0, 0.2};
  const TuneResult r = grid_search(g, ModelConfig{}, quick(), series(), FixedOrigin{});
  ASSERT_EQ(r.cells.size(), 8u);
  std::size_t i = 0;
  for (std::size_t s : g.sizes)
    for (std::size_t l : g.lags)
      for (double d : g.dropouts) {
        EXPECT_EQ(r.cells[i].size, s);
        EXPECT_EQ(r.cells[i].lag, l);
        EXPECT_EQ(r.cells[i].dropout, d);
        EXPECT_EQ(r.cells[i].failed, l == 200) << r.cells[i].error;
        if (r.cells[i].failed) {
          EXPECT_NE(r.cells[i].error.find("minimum length"), std::string::npos);
        }
        ++i;
      }
  EXPECT_EQ(r.best.lag, 4u);

  std::ostringstream csv;
  write_csv(r, csv);
  std::istringstream lines(csv.str());
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "size,lag,dropout,val_loss,accuracy,epochs");
  std::getline(lines, line);
  EXPECT_EQ(line.rfind("2,4,0,", 0), 0u) << line;
  std::getline(lines, line);
  std::getline(lines, line);
  EXPECT_EQ(line, "2,200,0,,,");
}

TEST(GridSearch, IndependentOfWorkerCount) {
  Grid g;
  g.sizes = {3, 4};
  g.lags = {5, 8};
  g.dropouts = {0.0, 0.1};
  g.variant = Variant::Attention;
  ModelConfig base;
  base.seed = 77;
  const TuneResult a = grid_search(g, base, quick(), series(), RollingOrigin{2, 0.6, 0}, 1);
  const TuneResult b = grid_search(g, base, quick(), series(), RollingOrigin{2, 0.6, 0}, 4);
  std::ostringstream ca, cb;
  write_csv(a, ca);
  write_csv(b, cb);
  EXPECT_EQ(ca.str(), cb.str());
}

TEST(GridSearch, ReplicatesAverageOverSeeds) {
  Grid g;
  g.sizes = {3};
  g.lags = {5};
  g.dropouts = {0.0};
  g.seeds_per_cell = 2;
  ModelConfig base;
  base.seed = 9;
  const TuneResult r = grid_search(g, base, quick(), series(), FixedOrigin{});
  double expected = 0.0;
  for (std::size_t rep = 0; rep < 2; ++rep) {
    ModelConfig mc = base;
    mc.size = 3;
    mc.lag = 5;
    mc.seed = derive_seed(base.seed, rep);
    TrainConfig tc = quick();
    tc.seed = derive_seed(tc.seed, rep);
    expected += evaluate(mc, tc, series(), FixedOrigin{}).mean_loss;
  }
  EXPECT_DOUBLE_EQ(r.cells[0].val_loss, expected / 2.0);
}

}  // namespace
}  // namespace attnfts

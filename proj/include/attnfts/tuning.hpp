#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "attnfts/evaluation.hpp"

namespace attnfts {

struct Grid {
  std::vector<std::size_t> sizes{16, 32, 64};
  std::vector<std::size_t> lags{5, 15, 30, 60};
  std::vector<double> dropouts{0.0, 0.05, 0.1, 0.2, 0.3};
  Variant variant = Variant::Plain;
  std::size_t seeds_per_cell = 1;

  std::size_t cell_count() const noexcept { return sizes.size() * lags.size() * dropouts.size(); }

  void validate() const {
    std::string problems;
    if (sizes.empty() || lags.empty() || dropouts.empty())
      problems += " sizes, lags and dropouts must be nonempty;";
    if (seeds_per_cell < 1) problems += " seeds_per_cell must be >= 1;";
    for (std::size_t s : sizes)
      if (s < 1) problems += " size " + std::to_string(s) + " must be >= 1;";
    for (std::size_t l : lags)
      if (l < 2) problems += " lag " + std::to_string(l) + " must be >= 2;";
    for (double d : dropouts)
      if (!(d >= 0.0 && d < 1.0)) problems += " dropout " + format_double(d) + " must be in [0, 1);";
    if (!problems.empty()) {
      problems.pop_back();
      throw ConfigError("invalid grid:" + problems);
    }
  }
};

struct CellResult {
  std::size_t size = 0;
  std::size_t lag = 0;
  double dropout = 0.0;
  double val_loss = 0.0;  // mean over seeds of the plan-averaged loss
  double up_down_accuracy = 0.0;
  std::size_t epochs = 0;
  bool failed = false;
  std::string error;
};

struct TuneResult {
  Variant variant = Variant::Plain;
  std::vector<CellResult> cells;  // sizes x lags x dropouts, dropout fastest
  CellResult best;
};

/// Lowest validation loss; ties go to smaller size, then lag, then dropout.
/// Independent of the order of `results`.
inline CellResult select_best(std::span<const CellResult> results) {
  const CellResult* best = nullptr;
  const auto key = [](const CellResult& c) {
    return std::make_tuple(c.val_loss, c.size, c.lag, c.dropout);
  };
  for (const CellResult& c : results) {
    if (c.failed) continue;
    if (best == nullptr || key(c) < key(*best)) best = &c;
  }
  if (best == nullptr) throw TuningError("grid search: every cell failed");
  return *best;
}

/// Evaluates every cell of the grid under the same plan and training config.
/// Cells run in parallel; each cell's seeds depend only on base.seed and the
/// replicate index, so the result is independent of scheduling.
inline TuneResult grid_search(const Grid& grid, const ModelConfig& base, const TrainConfig& train_cfg,
                              const PriceSeries& series, const SplitPlan& plan,
                              std::size_t jobs = 1) {
  grid.validate();
  train_cfg.validate();
  validate_plan(plan);

  TuneResult result;
  result.variant = grid.variant;
  for (std::size_t s : grid.sizes)
    for (std::size_t l : grid.lags)
      for (double d : grid.dropouts) result.cells.push_back({s, l, d, 0.0, 0.0, 0, false, {}});

  parallel_for(result.cells.size(), jobs, [&](std::size_t i) {
    CellResult& cell = result.cells[i];
    try {
      double loss = 0.0;
      double acc = 0.0;
      for (std::size_t rep = 0; rep < grid.seeds_per_cell; ++rep) {
        ModelConfig mc = base;
        mc.variant = grid.variant;
        mc.size = cell.size;
        mc.lag = cell.lag;
        mc.dropout = cell.dropout;
        mc.seed = derive_seed(base.seed, rep);
        TrainConfig tc = train_cfg;
        tc.seed = derive_seed(train_cfg.seed, rep);
        const EvalReport r = evaluate(mc, tc, series, plan);
        loss += r.mean_loss;
        acc += r.mean_accuracy;
        cell.epochs = r.splits.front().epochs_run;
      }
      cell.val_loss = loss / static_cast<double>(grid.seeds_per_cell);
      cell.up_down_accuracy = acc / static_cast<double>(grid.seeds_per_cell);
    } catch (const Error& e) {
      cell.failed = true;
      cell.error = e.what();
    }
  });

  result.best = select_best(result.cells);
  return result;
}

/// `size,lag,dropout,val_loss,accuracy,epochs`; failed cells leave the
/// metric fields empty.
inline void write_csv(const TuneResult& result, std::ostream& out) {
  out << "size,lag,dropout,val_loss,accuracy,epochs\n";
  for (const CellResult& c : result.cells) {
    out << c.size << ',' << c.lag << ',' << format_double(c.dropout) << ',';
    if (c.failed)
      out << ",,\n";
    else
      out << format_double(c.val_loss) << ',' << format_double(c.up_down_accuracy) << ','
          << c.epochs << '\n';
  }
}

}  // namespace attnfts

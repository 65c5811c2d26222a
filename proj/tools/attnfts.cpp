// attnfts command-line driver: synth, train, evaluate, gridsearch, report.
//
// Exit codes: 0 success, 1 usage error, 2 data/config error, 3 runtime or
// numeric error. Failures print one diagnostic line on stderr.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "attnfts/run_config.hpp"

namespace fs = std::filesystem;
using namespace attnfts;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kDataOrConfig = 2, kRuntime = 3 };

PriceSeries load_series(const RunConfig& rc) {
  PriceSeries s = rc.csv ? load_csv(*rc.csv) : synthesize(*rc.synthetic);
  s.validate();
  return s;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

template <typename Writer>
std::string render(Writer&& w) {
  std::ostringstream os;
  w(os);
  return os.str();
}

Json run_config_json(const RunConfig& rc) {
  Json data;
  if (rc.csv) {
    data["csv"] = fs::absolute(*rc.csv).lexically_normal().string();
  } else {
    const SyntheticSpec& s = *rc.synthetic;
    data["synthetic"] = Json{{"kind", std::string(to_string(s.kind))},
                             {"length", s.length},
                             {"noise_std", s.noise_std},
                             {"ar_coefficient", s.ar_coefficient},
                             {"seed", s.seed}};
  }
  Json train = to_json(rc.train, rc.model.variant);
  train.erase("seed");
  return Json{{"schema_version", kSchemaVersion},
              {"seed", rc.seed},
              {"data", std::move(data)},
              {"model",
               {{"variant", std::string(to_string(rc.model.variant))},
                {"size", rc.model.size},
                {"lag", rc.model.lag},
                {"dropout", rc.model.dropout},
                {"attn_dim", rc.model.attn_dim}}},
              {"train", std::move(train)},
              {"plan", to_json(rc.plan)},
              {"evaluation",
               {{"threshold", rc.evaluation.threshold},
                {"attention_samples", rc.evaluation.attention_samples}}},
              {"output_dir", "."}};
}

int cmd_synth(const fs::path& spec_path, const fs::path& out_path) {
  const SyntheticSpec spec = load_synthetic_spec(spec_path);
  const PriceSeries series = synthesize(spec);
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  write_file(out_path, render([&](std::ostream& os) { write_csv(series, os); }));
  std::cout << "wrote " << series.size() << " prices to " << out_path.string() << '\n';
  return kOk;
}

int cmd_train(const fs::path& config_path) {
  const RunConfig rc = load_run_config(config_path);
  const PriceSeries series = load_series(rc);
  const Split split = plan_splits(rc.plan, series.size(), rc.model.lag).front();
  const SplitData data = prepare_split(series, split.train, split.val, rc.model.lag);

  Model model = build(rc.model);
  const LossHistory history = fit(model, data.train, data.val, rc.train);

  fs::create_directories(rc.output_dir);
  save_checkpoint(model, rc.output_dir / "checkpoint.json");
  write_file(rc.output_dir / "loss_history.csv",
             render([&](std::ostream& os) { write_csv(history, os); }));
  const EpochLoss& last = history.epochs.back();
  std::cout << to_string(rc.model.variant) << " size=" << rc.model.size << " lag=" << rc.model.lag
            << " params=" << param_count(model) << " epochs=" << history.size()
            << " train_loss=" << format_double(last.train_loss)
            << " val_loss=" << format_double(last.val_loss) << '\n';
  return kOk;
}

int cmd_evaluate(const fs::path& config_path, std::size_t jobs) {
  const RunConfig rc = load_run_config(config_path);
  const PriceSeries series = load_series(rc);
  EvalOptions opts = rc.evaluation;
  opts.jobs = jobs;
  const EvalReport report = evaluate(rc.model, rc.train, series, rc.plan, opts);

  fs::create_directories(rc.output_dir);
  write_file(rc.output_dir / "eval_report.json", to_json(report, series.name).dump(2) + "\n");
  write_file(rc.output_dir / "eval_report.csv",
             render([&](std::ostream& os) { write_csv(report, os); }));
  std::cout << to_string(rc.model.variant) << ' ' << plan_name(rc.plan)
            << " splits=" << report.splits.size() << " mean_loss=" << format_double(report.mean_loss)
            << " mean_accuracy=" << format_double(report.mean_accuracy) << '\n';
  return kOk;
}

int cmd_gridsearch(const fs::path& config_path, std::size_t jobs) {
  const RunConfig rc = load_run_config(config_path);
  const PriceSeries series = load_series(rc);
  const TuneResult result = grid_search(rc.grid, rc.model, rc.train, series, rc.plan, jobs);

  RunConfig best = rc;
  best.model.size = result.best.size;
  best.model.lag = result.best.lag;
  best.model.dropout = result.best.dropout;

  fs::create_directories(rc.output_dir);
  write_file(rc.output_dir / "tune_result.csv",
             render([&](std::ostream& os) { write_csv(result, os); }));
  write_file(rc.output_dir / "best_config.json", run_config_json(best).dump(2) + "\n");
  const auto failed = std::count_if(result.cells.begin(), result.cells.end(),
                                    [](const CellResult& c) { return c.failed; });
  std::cout << "cells=" << result.cells.size() << " failed=" << failed
            << " best: size=" << result.best.size << " lag=" << result.best.lag
            << " dropout=" << format_double(result.best.dropout)
            << " val_loss=" << format_double(result.best.val_loss)
            << " accuracy=" << format_double(result.best.up_down_accuracy) << '\n';
  return kOk;
}

struct SummaryRow {
  std::string source;
  std::string kind;
  std::string variant;
  std::string plan;
  std::size_t size = 0;
  std::size_t lag = 0;
  double dropout = 0.0;
  std::size_t n = 0;
  double loss = 0.0;
  double accuracy = 0.0;
};

Json read_json(const fs::path& p) {
  std::ifstream in(p);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw DataError(p.string() + ": " + e.what());
  }
}

/// Best row of a tune_result.csv (lowest loss, ties as in select_best).
std::optional<CellResult> best_tune_row(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  std::vector<CellResult> cells;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    while (f.size() < 6) f.emplace_back();
    CellResult c;
    c.size = std::stoul(f[0]);
    c.lag = std::stoul(f[1]);
    c.dropout = std::stod(f[2]);
    c.failed = f[3].empty();
    if (!c.failed) {
      c.val_loss = std::stod(f[3]);
      c.up_down_accuracy = std::stod(f[4]);
      c.epochs = std::stoul(f[5]);
    }
    cells.push_back(c);
  }
  try {
    return select_best(cells);
  } catch (const TuningError&) {
    return std::nullopt;
  }
}

int cmd_report(const fs::path& in_dir) {
  if (!fs::is_directory(in_dir)) throw DataError("report: " + in_dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(in_dir)) {
    const auto name = entry.path().filename();
    if (name == "eval_report.json" || name == "tune_result.csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<SummaryRow> rows;
  for (const fs::path& f : files) {
    SummaryRow row;
    row.source = fs::relative(f.parent_path(), in_dir).generic_string();
    try {
      if (f.filename() == "eval_report.json") {
        const Json j = read_json(f);
        row.kind = "evaluate";
        row.variant = j.at("config").at("variant").get<std::string>();
        row.plan = j.at("plan").at("kind").get<std::string>();
        row.size = j.at("config").at("size").get<std::size_t>();
        row.lag = j.at("config").at("lag").get<std::size_t>();
        row.dropout = j.at("config").at("dropout").get<double>();
        row.n = j.at("aggregate").at("n_splits").get<std::size_t>();
        row.loss = j.at("aggregate").at("mean_loss").get<double>();
        row.accuracy = j.at("aggregate").at("mean_accuracy").get<double>();
      } else {
        const auto best = best_tune_row(f);
        if (!best) continue;
        row.kind = "gridsearch";
        const fs::path cfg = f.parent_path() / "best_config.json";
        if (fs::exists(cfg)) {
          const Json j = read_json(cfg);
          row.variant = j.at("model").at("variant").get<std::string>();
          row.plan = j.at("plan").at("kind").get<std::string>();
        }
        row.size = best->size;
        row.lag = best->lag;
        row.dropout = best->dropout;
        row.n = 1;
        row.loss = best->val_loss;
        row.accuracy = best->up_down_accuracy;
      }
    } catch (const Json::exception& e) {
      throw DataError(f.string() + ": " + e.what());
    } catch (const std::invalid_argument&) {
      throw DataError(f.string() + ": malformed row");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("report: no eval_report.json or tune_result.csv under " + in_dir.string());

  std::ostringstream table;
  table << "source,kind,variant,plan,size,lag,dropout,n_splits,mean_loss,mean_accuracy\n";
  for (const SummaryRow& r : rows) {
    table << r.source << ',' << r.kind << ',' << r.variant << ',' << r.plan << ',' << r.size << ','
          << r.lag << ',' << format_double(r.dropout) << ',' << r.n << ','
          << format_double(r.loss) << ',' << format_double(r.accuracy) << '\n';
  }

  // Per-variant rollup over evaluate rows, with 95% normal intervals.
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_variant;
  for (const SummaryRow& r : rows) {
    if (r.kind != "evaluate") continue;
    by_variant[r.variant].first.push_back(r.loss);
    by_variant[r.variant].second.push_back(r.accuracy);
  }
  std::ostringstream rollup;
  rollup << "variant,runs,mean_loss,loss_ci95,mean_accuracy,accuracy_ci95,best_accuracy\n";
  std::string winner;
  double best_acc = -1.0;
  for (const auto& [variant, xs] : by_variant) {
    const double acc = summarize(xs.second).mean;
    if (acc > best_acc) {
      best_acc = acc;
      winner = variant;
    }
  }
  for (const auto& [variant, xs] : by_variant) {
    const SampleSummary loss = summarize(xs.first);
    const SampleSummary acc = summarize(xs.second);
    rollup << variant << ',' << loss.n << ',' << format_double(loss.mean) << ','
           << format_double(loss.ci95_half) << ',' << format_double(acc.mean) << ','
           << format_double(acc.ci95_half) << ',' << (variant == winner ? "yes" : "no") << '\n';
  }

  write_file(in_dir / "summary.csv", table.str());
  write_file(in_dir / "variant_summary.csv", rollup.str());
  std::cout << table.str() << '\n' << rollup.str();
  return kOk;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const DataError*>(&e) ||
      dynamic_cast<const PlanError*>(&e) || dynamic_cast<const ArgumentError*>(&e))
    return kDataOrConfig;
  return kRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LSTM and LSTM-with-attention forecasting of daily price series"};
  app.require_subcommand(1);

  fs::path spec_path;
  fs::path out_path;
  auto* synth = app.add_subcommand("synth", "Write a synthetic price series CSV");
  synth->add_option("--spec", spec_path, "Synthetic spec JSON")->required();
  synth->add_option("--out", out_path, "Output CSV")->required();

  fs::path config_path;
  std::size_t jobs = default_jobs();
  auto* train = app.add_subcommand("train", "Train one model; write checkpoint and loss history");
  train->add_option("--config", config_path, "Run config JSON")->required();

  auto* eval = app.add_subcommand("evaluate", "Run a split plan; write evaluation report");
  eval->add_option("--config", config_path, "Run config JSON")->required();
  eval->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  auto* grid = app.add_subcommand("gridsearch", "Grid search size x lag x dropout");
  grid->add_option("--config", config_path, "Run config JSON")->required();
  grid->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  fs::path in_dir;
  auto* report = app.add_subcommand("report", "Collate prior outputs into summary tables");
  report->add_option("--in", in_dir, "Directory holding prior outputs")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (synth->parsed()) return cmd_synth(spec_path, out_path);
    if (train->parsed()) return cmd_train(config_path);
    if (eval->parsed()) return cmd_evaluate(config_path, jobs);
    if (grid->parsed()) return cmd_gridsearch(config_path, jobs);
    if (report->parsed()) return cmd_report(in_dir);
  } catch (const attnfts::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataOrConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kUsage;
}

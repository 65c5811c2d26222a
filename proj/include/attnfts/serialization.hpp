#pragma once

#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>
#include <string>

#include "json.hpp"

#include "attnfts/evaluation.hpp"
#include "attnfts/model.hpp"
#include "attnfts/tuning.hpp"

namespace attnfts {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

inline Json to_json(const ModelConfig& c) {
  return Json{{"variant", std::string(to_string(c.variant))},
              {"size", c.size},
              {"lag", c.lag},
              {"dropout", c.dropout},
              {"input_dim", c.input_dim},
              {"attn_dim", c.attn_dim},
              {"seed", c.seed}};
}

inline Json to_json(const TrainConfig& c, Variant variant) {
  return Json{{"max_epochs", c.epochs_for(variant)},
              {"batch_size", c.batch_size},
              {"shuffle_each_epoch", c.shuffle_each_epoch},
              {"learning_rate", c.learning_rate},
              {"clip_norm", c.clip_norm},
              {"seed", c.seed}};
}

inline Json to_json(const SplitPlan& plan) {
  Json j{{"kind", plan_name(plan)}};
  if (const auto* p = std::get_if<FixedOrigin>(&plan)) {
    j["train_frac"] = p->train_frac;
  } else if (const auto* p = std::get_if<RollingOrigin>(&plan)) {
    j["num_splits"] = p->num_splits;
    j["initial_frac"] = p->initial_frac;
    j["stride"] = p->stride;
  } else {
    const auto& w = std::get<RollingWindow>(plan);
    j["train_len"] = w.train_len;
    j["val_len"] = w.val_len;
    j["stride"] = w.stride;
  }
  return j;
}

inline Json to_json(const Matrix& m) {
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.values()}};
}

// ---------------------------------------------------------------------------
// Model checkpoints

inline Json checkpoint_json(const Model& model) {
  Json params = Json::array();
  model.params.for_each([&](const std::string& name, const Matrix& m) {
    Json entry = to_json(m);
    entry["name"] = name;
    params.push_back(std::move(entry));
  });
  return Json{{"schema_version", kSchemaVersion},
              {"kind", "attnfts.checkpoint"},
              {"config", to_json(model.config)},
              {"parameters", std::move(params)}};
}

inline ModelConfig model_config_from_json(const Json& j) {
  ModelConfig c;
  c.variant = parse_variant(j.at("variant").get<std::string>());
  c.size = j.at("size").get<std::size_t>();
  c.lag = j.at("lag").get<std::size_t>();
  c.dropout = j.at("dropout").get<double>();
  c.input_dim = j.at("input_dim").get<std::size_t>();
  c.attn_dim = j.at("attn_dim").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

inline Model model_from_checkpoint(const Json& j) {
  try {
    if (j.at("schema_version").get<int>() != kSchemaVersion)
      throw DataError("checkpoint: unsupported schema_version");
    Model model;
    model.config = model_config_from_json(j.at("config"));
    model.config.validate();
    model.params = zero_parameters(model.config);
    std::set<std::string> seen;
    const Json& entries = j.at("parameters");
    model.params.for_each([&](const std::string& name, Matrix& m) {
      const auto it = std::find_if(entries.begin(), entries.end(),
                                   [&](const Json& e) { return e.at("name") == name; });
      if (it == entries.end()) throw DataError("checkpoint: missing parameter " + name);
      if (it->at("rows").get<std::size_t>() != m.rows() ||
          it->at("cols").get<std::size_t>() != m.cols())
        throw DataError("checkpoint: parameter " + name + " has the wrong shape");
      m = Matrix(m.rows(), m.cols(), it->at("data").get<std::vector<double>>());
      seen.insert(name);
    });
    if (seen.size() != entries.size()) throw DataError("checkpoint: unexpected extra parameters");
    return model;
  } catch (const Json::exception& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
}

inline void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << checkpoint_json(model).dump(1) << '\n';
}

inline Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  try {
    return model_from_checkpoint(Json::parse(in));
  } catch (const Json::exception& e) {
    throw DataError("checkpoint " + path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Evaluation reports
//
// JSON layout:
//   { schema_version, kind: "attnfts.eval_report", series, config, train, plan,
//     threshold,
//     splits: [ { index, train: [begin, end), val: [begin, end), val_loss,
//                 up_down_accuracy, n_predictions, epochs, final_train_loss,
//                 thresholded: { accuracy | null, trades },
//                 attention_weights: [[...], ...] } ],
//     aggregate: { n_splits, mean_loss, mean_accuracy } }

inline Json to_json(const EvalReport& r, const std::string& series_name = {}) {
  Json splits = Json::array();
  for (const SplitResult& s : r.splits) {
    Json thresholded{{"accuracy", nullptr}, {"trades", s.thresholded.trade_count}};
    if (s.thresholded.accuracy) thresholded["accuracy"] = *s.thresholded.accuracy;
    splits.push_back(Json{{"index", s.index},
                          {"train", {s.split.train.begin, s.split.train.end}},
                          {"val", {s.split.val.begin, s.split.val.end}},
                          {"val_loss", s.val_loss},
                          {"up_down_accuracy", s.up_down_accuracy},
                          {"n_predictions", s.n_predictions},
                          {"epochs", s.epochs_run},
                          {"final_train_loss", s.final_train_loss},
                          {"thresholded", std::move(thresholded)},
                          {"attention_weights", s.attention_weights}});
  }
  return Json{{"schema_version", kSchemaVersion},
              {"kind", "attnfts.eval_report"},
              {"series", series_name},
              {"config", to_json(r.config)},
              {"train", to_json(r.train, r.config.variant)},
              {"plan", to_json(r.plan)},
              {"threshold", r.threshold},
              {"splits", std::move(splits)},
              {"aggregate",
               {{"n_splits", r.splits.size()},
                {"mean_loss", r.mean_loss},
                {"mean_accuracy", r.mean_accuracy}}}};
}

/// One row per split plus a trailing `mean` row.
inline void write_csv(const EvalReport& r, std::ostream& out) {
  out << "variant,plan,split,train_begin,train_end,val_begin,val_end,n_predictions,val_loss,"
         "accuracy,thresholded_accuracy,trades\n";
  const std::string prefix = std::string(to_string(r.config.variant)) + ',' + plan_name(r.plan) + ',';
  for (const SplitResult& s : r.splits) {
    out << prefix << s.index << ',' << s.split.train.begin << ',' << s.split.train.end << ','
        << s.split.val.begin << ',' << s.split.val.end << ',' << s.n_predictions << ','
        << format_double(s.val_loss) << ',' << format_double(s.up_down_accuracy) << ','
        << (s.thresholded.accuracy ? format_double(*s.thresholded.accuracy) : std::string{})
        << ',' << s.thresholded.trade_count << '\n';
  }
  out << prefix << "mean,,,,,," << format_double(r.mean_loss) << ','
      << format_double(r.mean_accuracy) << ",,\n";
}

inline Json to_json(const CellResult& c) {
  Json j{{"size", c.size}, {"lag", c.lag}, {"dropout", c.dropout}};
  if (c.failed) {
    j["failed"] = true;
    j["error"] = c.error;
  } else {
    j["val_loss"] = c.val_loss;
    j["accuracy"] = c.up_down_accuracy;
    j["epochs"] = c.epochs;
  }
  return j;
}

inline Json to_json(const SampleSummary& s) {
  return Json{{"n", s.n}, {"mean", s.mean}, {"stddev", s.stddev}, {"ci95_half", s.ci95_half}};
}

inline Json to_json(const Comparison& c) {
  const auto side = [](const VariantSummary& v) {
    return Json{{"loss", to_json(v.loss)}, {"accuracy", to_json(v.accuracy)},
                {"losses", v.losses}, {"accuracies", v.accuracies}};
  };
  return Json{{"plain", side(c.plain)},
              {"attention", side(c.attention)},
              {"accuracy_winner", std::string(to_string(c.accuracy_winner))},
              {"loss_winner", std::string(to_string(c.loss_winner))},
              {"accuracy_separated", c.accuracy_separated},
              {"loss_separated", c.loss_separated}};
}

}  // namespace attnfts

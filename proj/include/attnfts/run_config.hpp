#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>

#include "attnfts/serialization.hpp"

namespace attnfts {

/// Everything one CLI invocation needs, parsed from a single JSON document.
///
///   {
///     "schema_version": 1,
///     "seed": 42,
///     "data": {"csv": "prices.csv"} | {"synthetic": {kind, length, noise_std, ar_coefficient, seed}},
///     "model": {variant, size, lag, dropout, attn_dim},
///     "train": {max_epochs, batch_size, shuffle_each_epoch, learning_rate, clip_norm},
///     "plan": {"kind": "fixed_origin", train_frac}
///           | {"kind": "rolling_origin", num_splits, initial_frac, stride}
///           | {"kind": "rolling_window", train_len, val_len, stride},
///     "grid": {sizes, lags, dropouts, seeds_per_cell},
///     "evaluation": {threshold, attention_samples},
///     "output_dir": "out"
///   }
///
/// Every section except schema_version and data is optional. Unknown keys are
/// rejected. Relative paths resolve against the config file's directory.
struct RunConfig {
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> csv;
  std::optional<SyntheticSpec> synthetic;
  ModelConfig model;
  TrainConfig train;
  SplitPlan plan = FixedOrigin{};
  Grid grid;
  EvalOptions evaluation;
  std::filesystem::path output_dir = "out";

  /// Seeds the model and training streams from the global seed.
  void apply_seed(std::uint64_t s) {
    seed = s;
    model.seed = derive_seed(s, 1);
    train.seed = derive_seed(s, 2);
  }
};

namespace detail {

/// Reads fields from a JSON object and remembers which keys were consumed,
/// so leftovers can be reported as unknown.
class StrictObject {
 public:
  StrictObject(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be a JSON object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <typename T>
  std::optional<T> get(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) return std::nullopt;
    try {
      return j_.at(key).get<T>();
    } catch (const Json::exception&) {
      throw ConfigError(child(key) + " has the wrong type");
    }
  }

  template <typename T>
  T require(const std::string& key) {
    if (!j_.contains(key)) throw ConfigError("missing required key " + child(key));
    return *get<T>(key);
  }

  StrictObject object(const std::string& key) {
    used_.insert(key);
    return StrictObject(j_.at(key), dotted(key));
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!used_.count(item.key())) throw ConfigError("unknown config key " + child(item.key()));
  }

  std::string child(const std::string& key) const { return "'" + dotted(key) + "'"; }

 private:
  std::string dotted(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }
  std::string where() const { return path_.empty() ? "config" : "'" + path_ + "'"; }

  const Json& j_;
  std::string path_;
  std::set<std::string> used_;
};

template <typename T>
void assign(StrictObject& o, const std::string& key, T& field) {
  if (auto v = o.get<T>(key)) field = *v;
}

inline SyntheticSpec parse_synthetic(StrictObject o, std::uint64_t default_seed) {
  SyntheticSpec spec;
  spec.seed = default_seed;
  if (auto k = o.get<std::string>("kind")) spec.kind = parse_synthetic_kind(*k);
  assign(o, "length", spec.length);
  assign(o, "noise_std", spec.noise_std);
  assign(o, "ar_coefficient", spec.ar_coefficient);
  assign(o, "seed", spec.seed);
  o.finish();
  spec.validate();
  return spec;
}

inline SplitPlan parse_plan(StrictObject o) {
  const std::string kind = o.require<std::string>("kind");
  SplitPlan plan;
  if (kind == "fixed_origin") {
    FixedOrigin p;
    assign(o, "train_frac", p.train_frac);
    plan = p;
  } else if (kind == "rolling_origin") {
    RollingOrigin p;
    assign(o, "num_splits", p.num_splits);
    assign(o, "initial_frac", p.initial_frac);
    assign(o, "stride", p.stride);
    plan = p;
  } else if (kind == "rolling_window") {
    RollingWindow p;
    assign(o, "train_len", p.train_len);
    assign(o, "val_len", p.val_len);
    assign(o, "stride", p.stride);
    plan = p;
  } else {
    throw ConfigError("unknown plan kind '" + kind +
                      "' (expected fixed_origin|rolling_origin|rolling_window)");
  }
  o.finish();
  validate_plan(plan);
  return plan;
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace detail

/// Parses and validates a run config. `base_dir` anchors relative paths;
/// `seed_override` replaces the document's seed (ATTNFTS_SEED).
inline RunConfig parse_run_config(const Json& doc, const std::filesystem::path& base_dir,
                                  std::optional<std::uint64_t> seed_override = std::nullopt) {
  RunConfig rc;
  detail::StrictObject root(doc, "");
  const int version = root.require<int>("schema_version");
  if (version != kSchemaVersion)
    throw ConfigError("unsupported schema_version " + std::to_string(version) + " (expected " +
                      std::to_string(kSchemaVersion) + ")");

  std::uint64_t seed = root.get<std::uint64_t>("seed").value_or(0);
  if (seed_override) seed = *seed_override;
  rc.apply_seed(seed);

  if (!root.has("data")) throw ConfigError("missing required key 'data'");
  {
    auto data = root.object("data");
    if (data.has("csv") == data.has("synthetic"))
      throw ConfigError("'data' needs exactly one of 'csv' or 'synthetic'");
    if (auto csv = data.get<std::string>("csv")) rc.csv = detail::resolve(base_dir, *csv);
    if (data.has("synthetic"))
      rc.synthetic = detail::parse_synthetic(data.object("synthetic"), derive_seed(seed, 3));
    data.finish();
  }

  if (root.has("model")) {
    auto m = root.object("model");
    if (auto v = m.get<std::string>("variant")) rc.model.variant = parse_variant(*v);
    detail::assign(m, "size", rc.model.size);
    detail::assign(m, "lag", rc.model.lag);
    detail::assign(m, "dropout", rc.model.dropout);
    detail::assign(m, "attn_dim", rc.model.attn_dim);
    m.finish();
  }
  rc.model.validate();

  if (root.has("train")) {
    auto t = root.object("train");
    if (auto e = t.get<std::size_t>("max_epochs")) rc.train.max_epochs = *e;
    detail::assign(t, "batch_size", rc.train.batch_size);
    detail::assign(t, "shuffle_each_epoch", rc.train.shuffle_each_epoch);
    detail::assign(t, "learning_rate", rc.train.learning_rate);
    detail::assign(t, "clip_norm", rc.train.clip_norm);
    t.finish();
  }
  rc.train.validate();

  if (root.has("plan")) rc.plan = detail::parse_plan(root.object("plan"));

  if (root.has("grid")) {
    auto g = root.object("grid");
    detail::assign(g, "sizes", rc.grid.sizes);
    detail::assign(g, "lags", rc.grid.lags);
    detail::assign(g, "dropouts", rc.grid.dropouts);
    detail::assign(g, "seeds_per_cell", rc.grid.seeds_per_cell);
    g.finish();
  }
  rc.grid.variant = rc.model.variant;
  rc.grid.validate();

  if (root.has("evaluation")) {
    auto e = root.object("evaluation");
    detail::assign(e, "threshold", rc.evaluation.threshold);
    detail::assign(e, "attention_samples", rc.evaluation.attention_samples);
    e.finish();
    if (!(rc.evaluation.threshold >= 0.0)) throw ConfigError("'evaluation.threshold' must be >= 0");
  }

  if (auto out = root.get<std::string>("output_dir")) rc.output_dir = detail::resolve(base_dir, *out);
  else rc.output_dir = base_dir / "out";

  root.finish();
  return rc;
}

inline std::optional<std::uint64_t> seed_from_env() {
  const char* s = std::getenv("ATTNFTS_SEED");
  if (s == nullptr || *s == '\0') return std::nullopt;
  std::uint64_t v = 0;
  const char* end = s + std::char_traits<char>::length(s);
  const auto res = std::from_chars(s, end, v);
  if (res.ec != std::errc{} || res.ptr != end)
    throw ConfigError("ATTNFTS_SEED must be an unsigned integer, got '" + std::string(s) + "'");
  return v;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return parse_run_config(doc, path.parent_path().empty() ? "." : path.parent_path(),
                          seed_from_env());
}

/// Synthetic spec file for `synth --spec`: same keys as data.synthetic.
inline SyntheticSpec load_synthetic_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open spec " + path.string());
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError("spec " + path.string() + ": " + e.what());
  }
  const auto env = seed_from_env();
  SyntheticSpec spec = detail::parse_synthetic(detail::StrictObject(doc, ""), 0);
  if (env) spec.seed = *env;
  return spec;
}

}  // namespace attnfts

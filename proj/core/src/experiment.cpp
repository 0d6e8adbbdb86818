#include "splitkit/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "splitkit/digest.hpp"
#include "splitkit/errors.hpp"
#include "splitkit/ingest.hpp"
#include "splitkit/io_util.hpp"
#include "splitkit/rng.hpp"
#include "splitkit/version.hpp"

namespace splitkit {

namespace {

using json = nlohmann::ordered_json;

struct ErrorList {
  std::vector<std::string> items;

  void add(const std::string& path, const std::string& message) {
    items.push_back(path + ": " + message);
  }

  void raise_if_any() const {
    if (items.empty()) return;
    std::string msg = "invalid experiment config:";
    for (const std::string& e : items) msg += "\n  " + e;
    throw ConfigError(msg);
  }
};

void check_keys(const json& j, const std::string& where,
                const std::set<std::string>& allowed, ErrorList& errs) {
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) {
      std::string valid;
      for (const std::string& k : allowed) {
        valid += (valid.empty() ? "" : ", ") + k;
      }
      errs.add(where + "." + key, "unknown field (valid: " + valid + ")");
    }
  }
}

std::string hexfloat(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

const char* const kHpFields[] = {
    "embedding_dim",  "learning_rate", "epochs",
    "negatives_per_positive", "regularization", "neighborhood_size"};

void set_hp_field(Hyperparameters& hp, const std::string& field,
                  const json& value) {
  if (field == "embedding_dim") {
    hp.embedding_dim = value.get<std::size_t>();
  } else if (field == "learning_rate") {
    hp.learning_rate = value.get<double>();
  } else if (field == "epochs") {
    hp.epochs = value.get<std::size_t>();
  } else if (field == "negatives_per_positive") {
    hp.negatives_per_positive = value.get<std::size_t>();
  } else if (field == "regularization") {
    hp.regularization = value.get<double>();
  } else if (field == "neighborhood_size") {
    hp.neighborhood_size = value.get<std::size_t>();
  }
}

json hp_to_json(const Hyperparameters& hp) {
  json j;
  j["embedding_dim"] = hp.embedding_dim;
  j["learning_rate"] = hp.learning_rate;
  j["epochs"] = hp.epochs;
  j["negatives_per_positive"] = hp.negatives_per_positive;
  j["regularization"] = hp.regularization;
  j["neighborhood_size"] = hp.neighborhood_size;
  return j;
}

bool known_hp_field(const std::string& field) {
  for (const char* f : kHpFields) {
    if (field == f) return true;
  }
  return false;
}

std::vector<ModelPoint> expand_model_entry(const json& jm,
                                           const std::string& where,
                                           ErrorList& errs) {
  check_keys(jm, where, {"model", "hp", "grid", "system_id"}, errs);
  std::vector<ModelPoint> points;
  ModelKind kind;
  try {
    kind = parse_model_kind(jm.at("model").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    errs.add(where + ".model", e.what());
    return points;
  } catch (const Error& e) {
    errs.add(where + ".model", e.what());
    return points;
  }
  if (jm.contains("hp") && jm.contains("grid")) {
    errs.add(where, "give either hp or grid, not both");
    return points;
  }
  try {
    if (jm.contains("grid")) {
      const json& grid = jm.at("grid");
      for (const auto& [key, values] : grid.items()) {
        if (!known_hp_field(key)) {
          errs.add(where + ".grid." + key, "unknown hyperparameter");
          return points;
        }
        if (!values.is_array() || values.empty()) {
          errs.add(where + ".grid." + key, "must be a non-empty array");
          return points;
        }
      }
      // Cartesian product in canonical field order.
      std::vector<ModelPoint> expanded{{kind, Hyperparameters{}, ""}};
      for (const char* field : kHpFields) {
        if (!grid.contains(field)) continue;
        std::vector<ModelPoint> next;
        for (const ModelPoint& base : expanded) {
          for (const json& value : grid.at(field)) {
            ModelPoint p = base;
            set_hp_field(p.hp, field, value);
            next.push_back(std::move(p));
          }
        }
        expanded = std::move(next);
      }
      points = std::move(expanded);
    } else {
      ModelPoint p{kind, Hyperparameters{}, ""};
      if (jm.contains("hp")) {
        const json& hp = jm.at("hp");
        for (const auto& [key, value] : hp.items()) {
          if (!known_hp_field(key)) {
            errs.add(where + ".hp." + key, "unknown hyperparameter");
            return points;
          }
          set_hp_field(p.hp, key, value);
        }
      }
      points.push_back(std::move(p));
    }
  } catch (const nlohmann::json::exception& e) {
    errs.add(where, e.what());
    return {};
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    try {
      validate_hyperparameters(points[i].kind, points[i].hp);
    } catch (const Error& e) {
      errs.add(where + (points.size() > 1 ? "[point " + std::to_string(i) + "]"
                                          : ""),
               e.what());
    }
  }
  return points;
}

StrategyEntry parse_strategy_entry(const json& js, const std::string& where,
                                   ErrorList& errs) {
  check_keys(js, where,
             {"strategy", "test_ratio", "valid_ratio", "seed",
              "fold_in_ratio", "intersection_filter",
              "boundary_by_interactions"},
             errs);
  StrategyEntry entry;
  try {
    entry.strategy.tag =
        parse_strategy_tag(js.at("strategy").get<std::string>());
    if (js.contains("test_ratio")) {
      entry.strategy.test_ratio = js.at("test_ratio").get<double>();
    }
    if (js.contains("valid_ratio")) {
      entry.strategy.valid_ratio = js.at("valid_ratio").get<double>();
    }
    if (js.contains("fold_in_ratio")) {
      entry.strategy.fold_in_ratio = js.at("fold_in_ratio").get<double>();
    }
    if (js.contains("seed")) {
      entry.strategy.seed = js.at("seed").get<std::uint64_t>();
      entry.seed_explicit = true;
    }
    if (js.contains("intersection_filter")) {
      entry.strategy.intersection_filter =
          js.at("intersection_filter").get<bool>();
    }
    if (js.contains("boundary_by_interactions")) {
      entry.strategy.boundary_by_interactions =
          js.at("boundary_by_interactions").get<bool>();
    }
  } catch (const nlohmann::json::exception& e) {
    errs.add(where, e.what());
    return entry;
  } catch (const Error& e) {
    errs.add(where + ".strategy", e.what());
    return entry;
  }
  try {
    validate_strategy(entry.strategy);
  } catch (const Error& e) {
    errs.add(where, e.what());
  }
  return entry;
}

FilterSpec parse_filter_spec(const json& jf, const std::string& where,
                             ErrorList& errs) {
  check_keys(jf, where,
             {"min_item_purchases", "min_user_items", "min_user_baskets",
              "order", "iterate_to_fixpoint"},
             errs);
  FilterSpec spec;
  try {
    if (jf.contains("min_item_purchases")) {
      spec.min_item_purchases =
          jf.at("min_item_purchases").get<std::uint32_t>();
    }
    if (jf.contains("min_user_items")) {
      spec.min_user_items = jf.at("min_user_items").get<std::uint32_t>();
    }
    if (jf.contains("min_user_baskets")) {
      spec.min_user_baskets = jf.at("min_user_baskets").get<std::uint32_t>();
    }
    if (jf.contains("order")) {
      spec.order = parse_filter_order(jf.at("order").get<std::string>());
    }
    if (jf.contains("iterate_to_fixpoint")) {
      spec.iterate_to_fixpoint = jf.at("iterate_to_fixpoint").get<bool>();
    }
  } catch (const nlohmann::json::exception& e) {
    errs.add(where, e.what());
  } catch (const Error& e) {
    errs.add(where + ".order", e.what());
  }
  return spec;
}

EvalConfig parse_eval_config(const json& je, const std::string& where,
                             ErrorList& errs) {
  // Per-tuple eval seeds are derived from the experiment seed, so the
  // seed is not an accepted field here.
  check_keys(je, where,
             {"k", "candidates", "sampled_negatives", "exclude_train_items",
              "granularity", "truncated_recall"},
             errs);
  EvalConfig config;
  try {
    if (je.contains("k")) config.k = je.at("k").get<std::size_t>();
    if (je.contains("candidates")) {
      config.candidate_mode =
          parse_candidate_mode(je.at("candidates").get<std::string>());
    }
    if (je.contains("sampled_negatives")) {
      config.sampled_negatives = je.at("sampled_negatives").get<std::size_t>();
    }
    if (je.contains("exclude_train_items")) {
      config.exclude_train_items = je.at("exclude_train_items").get<bool>();
    }
    if (je.contains("granularity")) {
      config.granularity =
          parse_granularity(je.at("granularity").get<std::string>());
    }
    if (je.contains("truncated_recall")) {
      config.truncated_recall = je.at("truncated_recall").get<bool>();
    }
  } catch (const nlohmann::json::exception& e) {
    errs.add(where, e.what());
  } catch (const Error& e) {
    errs.add(where, e.what());
  }
  if (config.k == 0) errs.add(where + ".k", "must be at least 1");
  if (config.candidate_mode == CandidateMode::kSampled &&
      config.sampled_negatives == 0) {
    errs.add(where + ".sampled_negatives",
             "must be at least 1 in sampled mode");
  }
  return config;
}

std::uint64_t resolved_split_seed(const ExperimentConfig& config,
                                  const StrategyEntry& entry) {
  if (entry.seed_explicit || !strategy_uses_seed(entry.strategy.tag)) {
    return entry.strategy.seed;
  }
  return derive_seed(config.seed,
                     {"split", strategy_tag_name(entry.strategy.tag)});
}

std::string filter_spec_key(const FilterSpec& spec) {
  return "min_item_purchases=" + std::to_string(spec.min_item_purchases) +
         ";min_user_items=" + std::to_string(spec.min_user_items) +
         ";min_user_baskets=" + std::to_string(spec.min_user_baskets) +
         ";order=" + filter_order_name(spec.order) +
         ";fixpoint=" + (spec.iterate_to_fixpoint ? "1" : "0");
}

std::string split_cache_key(const SplitStrategy& s,
                            const std::string& dataset_digest) {
  std::string text = strategy_tag_name(s.tag);
  text += ";test_ratio=" + std::string(hexfloat(s.test_ratio));
  text += ";valid_ratio=" + std::string(hexfloat(s.valid_ratio));
  text += ";seed=" + std::to_string(s.seed);
  text += ";fold_in_ratio=" + std::string(hexfloat(s.fold_in_ratio));
  text += ";intersection=" + std::string(s.intersection_filter ? "1" : "0");
  text += ";by_interactions=" +
          std::string(s.boundary_by_interactions ? "1" : "0");
  text += ";dataset=" + dataset_digest;
  return digest_hex(text).substr(0, 8);
}

std::string read_raw_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TaskFailure {
  std::string stage;
  std::string strategy;
  std::string model;
  json hp;
  std::string detail;
};

void write_failure_marker(const std::filesystem::path& out_dir,
                          const TaskFailure& failure) {
  json j;
  j["stage"] = failure.stage;
  j["strategy"] = failure.strategy;
  j["model"] = failure.model;
  if (!failure.hp.is_null()) j["hp"] = failure.hp;
  j["error"] = failure.detail;
  write_text(out_dir / "FAILED.json", j.dump(2) + "\n");
}

json parse_or_throw(std::string_view text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse " + what + ": " + e.what());
  }
}

}  // namespace

ExperimentConfig validate_config(std::string_view json_text,
                                 const std::filesystem::path& base_dir) {
  const json j = parse_or_throw(json_text, "experiment config");
  if (!j.is_object()) throw ConfigError("experiment config must be an object");
  ErrorList errs;
  // toolkit_version is informational: the echo written to a bundle's
  // config.json records it, and feeding that file back in must work.
  check_keys(j, "$",
             {"dataset", "synth", "filter", "strategies", "models", "eval",
              "metrics", "reference", "out", "seed", "threads",
              "toolkit_version"},
             errs);

  ExperimentConfig config;

  const bool has_dataset = j.contains("dataset");
  const bool has_synth = j.contains("synth");
  if (has_dataset == has_synth) {
    errs.add("$", has_dataset ? "give either dataset or synth, not both"
                              : "one of dataset or synth is required");
  }
  if (has_dataset && !has_synth) {
    try {
      std::filesystem::path p = j.at("dataset").get<std::string>();
      if (p.is_relative()) p = base_dir / p;
      p = std::filesystem::weakly_canonical(p);
      if (!std::filesystem::is_directory(p)) {
        errs.add("$.dataset", "no dataset directory at " + p.string());
      }
      config.dataset_path = p.string();
    } catch (const nlohmann::json::exception& e) {
      errs.add("$.dataset", e.what());
    }
  }
  if (has_synth && !has_dataset) {
    try {
      config.synth = synth_config_from_json(j.at("synth").dump());
    } catch (const nlohmann::json::exception& e) {
      errs.add("$.synth", e.what());
    } catch (const Error& e) {
      errs.add("$.synth", e.what());
    }
  }

  if (j.contains("filter")) {
    config.filter = parse_filter_spec(j.at("filter"), "$.filter", errs);
  }

  try {
    if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    errs.add("$.seed", e.what());
  }
  try {
    if (j.contains("threads")) {
      config.threads = j.at("threads").get<unsigned>();
    }
  } catch (const nlohmann::json::exception& e) {
    errs.add("$.threads", e.what());
  }
  try {
    if (j.contains("out")) {
      std::filesystem::path p = j.at("out").get<std::string>();
      if (p.is_relative()) p = base_dir / p;
      config.out_dir = p;
    }
  } catch (const nlohmann::json::exception& e) {
    errs.add("$.out", e.what());
  }

  if (!j.contains("strategies") || !j.at("strategies").is_array() ||
      j.at("strategies").empty()) {
    errs.add("$.strategies", "a non-empty array of strategies is required");
  } else {
    std::set<StrategyTag> seen;
    const json& arr = j.at("strategies");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string where = "$.strategies[" + std::to_string(i) + "]";
      if (!arr[i].is_object()) {
        errs.add(where, "must be an object");
        continue;
      }
      StrategyEntry entry = parse_strategy_entry(arr[i], where, errs);
      if (!seen.insert(entry.strategy.tag).second) {
        errs.add(where, "duplicate strategy " +
                            strategy_tag_name(entry.strategy.tag));
        continue;
      }
      config.strategies.push_back(std::move(entry));
    }
  }

  if (!j.contains("models") || !j.at("models").is_array() ||
      j.at("models").empty()) {
    errs.add("$.models", "a non-empty array of models is required");
  } else {
    const json& arr = j.at("models");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string where = "$.models[" + std::to_string(i) + "]";
      if (!arr[i].is_object()) {
        errs.add(where, "must be an object");
        continue;
      }
      for (ModelPoint& p : expand_model_entry(arr[i], where, errs)) {
        config.models.push_back(std::move(p));
      }
    }
    // System ids: plain kind name when the kind occurs once, else a
    // digest-suffixed form unique per hyperparameter point.
    std::map<ModelKind, std::size_t> per_kind;
    for (const ModelPoint& p : config.models) ++per_kind[p.kind];
    std::set<std::string> ids;
    for (std::size_t i = 0; i < config.models.size(); ++i) {
      ModelPoint& p = config.models[i];
      p.system_id = model_kind_name(p.kind);
      if (per_kind[p.kind] > 1) {
        p.system_id += "#" + hyperparameters_digest(p.hp).substr(0, 8);
      }
      if (!ids.insert(p.system_id).second) {
        errs.add("$.models", "duplicate model point " + p.system_id);
      }
    }
  }

  if (j.contains("eval")) {
    config.eval = parse_eval_config(j.at("eval"), "$.eval", errs);
  }

  if (j.contains("metrics")) {
    try {
      std::set<std::string> seen;
      for (const json& m : j.at("metrics")) {
        const std::string name = m.get<std::string>();
        if (!seen.insert(name).second) {
          errs.add("$.metrics", "duplicate metric " + name);
          continue;
        }
        config.metrics.push_back(parse_metric(name));
      }
      if (config.metrics.empty()) {
        errs.add("$.metrics", "must name at least one metric");
      }
    } catch (const nlohmann::json::exception& e) {
      errs.add("$.metrics", e.what());
    } catch (const Error& e) {
      errs.add("$.metrics", e.what());
    }
  } else {
    config.metrics = {Metric::kNdcg, Metric::kRecall};
  }

  if (j.contains("reference")) {
    try {
      config.reference = strategy_tag_name(
          parse_strategy_tag(j.at("reference").get<std::string>()));
    } catch (const nlohmann::json::exception& e) {
      errs.add("$.reference", e.what());
    } catch (const Error& e) {
      errs.add("$.reference", e.what());
    }
  }
  if (config.strategies.size() >= 2) {
    const bool found = std::any_of(
        config.strategies.begin(), config.strategies.end(),
        [&](const StrategyEntry& e) {
          return strategy_tag_name(e.strategy.tag) == config.reference;
        });
    if (!found) {
      errs.add("$.reference",
               config.reference + " is not among the configured strategies");
    }
  }

  errs.raise_if_any();
  return config;
}

std::string experiment_config_to_json(const ExperimentConfig& config) {
  json j;
  j["toolkit_version"] = kVersion;
  j["seed"] = config.seed;
  if (config.synth) {
    j["synth"] = parse_or_throw(synth_config_to_json(*config.synth),
                                "synth config echo");
  } else {
    j["dataset"] = config.dataset_path;
  }
  if (config.filter) {
    json jf;
    jf["min_item_purchases"] = config.filter->min_item_purchases;
    jf["min_user_items"] = config.filter->min_user_items;
    jf["min_user_baskets"] = config.filter->min_user_baskets;
    jf["order"] = filter_order_name(config.filter->order);
    jf["iterate_to_fixpoint"] = config.filter->iterate_to_fixpoint;
    j["filter"] = std::move(jf);
  }
  json strategies = json::array();
  for (const StrategyEntry& entry : config.strategies) {
    const SplitStrategy& s = entry.strategy;
    json js;
    js["strategy"] = strategy_tag_name(s.tag);
    js["test_ratio"] = s.test_ratio;
    js["valid_ratio"] = s.valid_ratio;
    js["seed"] = resolved_split_seed(config, entry);
    js["fold_in_ratio"] = s.fold_in_ratio;
    js["intersection_filter"] = s.intersection_filter;
    js["boundary_by_interactions"] = s.boundary_by_interactions;
    strategies.push_back(std::move(js));
  }
  j["strategies"] = std::move(strategies);
  json models = json::array();
  for (const ModelPoint& p : config.models) {
    json jm;
    jm["model"] = model_kind_name(p.kind);
    jm["system_id"] = p.system_id;
    jm["hp"] = hp_to_json(p.hp);
    models.push_back(std::move(jm));
  }
  j["models"] = std::move(models);
  json je;
  je["k"] = config.eval.k;
  je["candidates"] = candidate_mode_name(config.eval.candidate_mode);
  je["sampled_negatives"] = config.eval.sampled_negatives;
  je["exclude_train_items"] = config.eval.exclude_train_items;
  je["granularity"] = granularity_name(config.eval.granularity);
  je["truncated_recall"] = config.eval.truncated_recall;
  j["eval"] = std::move(je);
  json metrics = json::array();
  for (Metric m : config.metrics) metrics.push_back(metric_name(m));
  j["metrics"] = std::move(metrics);
  j["reference"] = config.reference;
  return j.dump(2) + "\n";
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  namespace fs = std::filesystem;
  if (config.out_dir.empty()) {
    throw ConfigError("experiment needs an output directory");
  }
  if (config.strategies.empty() || config.models.empty()) {
    throw ConfigError("experiment needs at least one strategy and one model");
  }
  const fs::path out = config.out_dir;
  fs::create_directories(out);
  std::error_code ec;
  fs::remove(out / "FAILED.json", ec);

  const std::string echo = experiment_config_to_json(config);
  write_text(out / "config.json", echo);

  auto fail = [&](TaskFailure f) -> StageError {
    write_failure_marker(out, f);
    return StageError(f.stage, f.strategy, f.model, f.detail);
  };

  Dataset source;
  try {
    if (config.synth) {
      source = generate(*config.synth);
      export_synth(*config.synth, source, out / "dataset");
    } else {
      source = load_dataset(config.dataset_path);
    }
  } catch (const std::exception& e) {
    throw fail({"dataset", "", "", json(), e.what()});
  }

  struct StrategyWork {
    std::string name;
    SplitStrategy strategy;
    const Dataset* data = nullptr;
    SplitResult split;
    fs::path split_dir;
  };

  // Filtered datasets are shared across strategies with the same spec;
  // std::map nodes keep their addresses as entries are added.
  std::map<std::string, Dataset> filtered;
  std::vector<StrategyWork> work;
  for (const StrategyEntry& entry : config.strategies) {
    StrategyWork w;
    w.strategy = entry.strategy;
    w.strategy.seed = resolved_split_seed(config, entry);
    w.name = strategy_tag_name(entry.strategy.tag);
    const FilterSpec spec =
        config.filter ? *config.filter : builtin_spec(entry.strategy.tag);
    const std::string key = filter_spec_key(spec);
    try {
      auto it = filtered.find(key);
      if (it == filtered.end()) {
        it = filtered.emplace(key, apply_filter(source, spec)).first;
      }
      w.data = &it->second;
    } catch (const std::exception& e) {
      throw fail({"filter", w.name, "", json(), e.what()});
    }
    const fs::path split_dir =
        out / "splits" /
        (w.name + "-" + split_cache_key(w.strategy, w.data->content_digest()));
    w.split_dir = split_dir;
    try {
      bool cached = false;
      if (fs::exists(split_dir / "manifest.json")) {
        try {
          SplitResult loaded = load_split(split_dir, *w.data);
          if (loaded.strategy == w.strategy) {
            w.split = std::move(loaded);
            cached = true;
          }
        } catch (const Error&) {
          // stale or corrupt cache entry, recompute below
        }
      }
      if (!cached) {
        w.split = run_split(*w.data, w.strategy);
        export_split(w.split, split_dir);
      }
    } catch (const std::exception& e) {
      throw fail({"split", w.name, "", json(), e.what()});
    }
    work.push_back(std::move(w));
  }

  const std::size_t n_strategies = work.size();
  const std::size_t n_models = config.models.size();
  const std::size_t n_tasks = n_strategies * n_models;
  std::vector<EvalReport> reports(n_tasks);

  unsigned n_threads = config.threads;
  if (n_threads == 0) n_threads = std::thread::hardware_concurrency();
  if (n_threads == 0) n_threads = 1;
  n_threads = static_cast<unsigned>(
      std::min<std::size_t>(n_threads, n_tasks));

  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex failure_mutex;
  std::optional<TaskFailure> first_failure;

  auto run_task = [&](std::size_t index) {
    const StrategyWork& w = work[index / n_models];
    const ModelPoint& point = config.models[index % n_models];
    std::string stage = "train";
    try {
      auto model = make_recommender(point.kind);
      const std::uint64_t train_seed =
          derive_seed(config.seed, {"train", w.name, point.system_id});
      model->fit(*w.data, w.split.train, w.split.validation, point.hp,
                 train_seed);
      model->save(out / "models" / w.name / (point.system_id + ".ckpt"));
      stage = "eval";
      EvalConfig eval_config = config.eval;
      eval_config.seed =
          derive_seed(config.seed, {"eval", w.name, point.system_id});
      EvalReport report =
          evaluate(*model, *w.data, w.split, eval_config, point.system_id);
      write_report_json(report,
                        out / "reports" / w.name / (point.system_id + ".json"));
      write_report_csv(report,
                       out / "reports" / w.name / (point.system_id + ".csv"));
      reports[index] = std::move(report);
    } catch (const std::exception& e) {
      std::scoped_lock lock(failure_mutex);
      if (!first_failure) {
        first_failure = {stage, w.name, point.system_id, hp_to_json(point.hp),
                         e.what()};
      }
      stop = true;
    }
  };

  if (n_threads <= 1) {
    for (std::size_t i = 0; i < n_tasks && !stop; ++i) run_task(i);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) {
      pool.emplace_back([&] {
        while (!stop) {
          const std::size_t i = next.fetch_add(1);
          if (i >= n_tasks) break;
          run_task(i);
        }
      });
    }
    for (std::thread& t : pool) t.join();
  }
  if (first_failure) throw fail(*first_failure);

  ExperimentResult result;
  result.bundle_dir = out;
  result.report_count = n_tasks;

  try {
    for (Metric metric : config.metrics) {
      RankSwapReport cmp =
          rank_swap_report(reports, metric, config.reference);
      const std::string name = metric_name(metric);
      write_comparison_json(cmp, out / "compare" / (name + ".json"));
      write_comparison_csv(cmp, out / "compare" / (name + ".csv"));
      write_text(out / "compare" / (name + ".txt"), render_table(cmp));
      for (std::size_t i = 0; i < cmp.rankings.size(); ++i) {
        for (std::size_t k = i + 1; k < cmp.rankings.size(); ++k) {
          write_scatter_csv(cmp.rankings[i], cmp.rankings[k],
                            out / "scatter" / name /
                                (cmp.rankings[i].strategy + "__" +
                                 cmp.rankings[k].strategy + ".csv"));
        }
      }
      result.comparisons.push_back(std::move(cmp));
    }
  } catch (const std::exception& e) {
    throw fail({"compare", "", "", json(), e.what()});
  }

  try {
    // Only this run's outputs enter the manifest; leftovers from other
    // configs sharing the directory (e.g. stale split caches) do not.
    std::vector<std::string> paths;
    auto add_file = [&](const fs::path& p) {
      paths.push_back(fs::relative(p, out).generic_string());
    };
    auto add_tree = [&](const fs::path& dir) {
      for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file()) add_file(entry.path());
      }
    };
    add_file(out / "config.json");
    if (config.synth) add_tree(out / "dataset");
    for (const StrategyWork& w : work) add_tree(w.split_dir);
    for (const StrategyWork& w : work) {
      for (const ModelPoint& point : config.models) {
        add_file(out / "models" / w.name / (point.system_id + ".ckpt"));
        add_file(out / "reports" / w.name / (point.system_id + ".json"));
        add_file(out / "reports" / w.name / (point.system_id + ".csv"));
      }
    }
    for (const RankSwapReport& cmp : result.comparisons) {
      for (const char* ext : {".json", ".csv", ".txt"}) {
        add_file(out / "compare" / (cmp.metric + ext));
      }
      for (std::size_t i = 0; i < cmp.rankings.size(); ++i) {
        for (std::size_t k = i + 1; k < cmp.rankings.size(); ++k) {
          add_file(out / "scatter" / cmp.metric /
                   (cmp.rankings[i].strategy + "__" +
                    cmp.rankings[k].strategy + ".csv"));
        }
      }
    }
    std::sort(paths.begin(), paths.end());
    json files;
    std::string roll;
    for (const std::string& rel : paths) {
      const std::string digest = digest_hex(read_raw_bytes(out / rel));
      files[rel] = digest;
      roll += rel;
      roll.push_back('\n');
      roll += digest;
      roll.push_back('\n');
    }
    result.bundle_digest = digest_hex(roll);
    json j;
    j["format_version"] = kReportFormatVersion;
    j["toolkit_version"] = kVersion;
    j["config_digest"] = digest_hex(echo);
    j["dataset_digest"] = source.content_digest();
    j["files"] = std::move(files);
    j["bundle_digest"] = result.bundle_digest;
    write_text(out / "bundle.json", j.dump(2) + "\n");
  } catch (const std::exception& e) {
    throw fail({"bundle", "", "", json(), e.what()});
  }

  return result;
}

}  // namespace splitkit

// splitkit command line front end. Exit codes: 0 success, 2 config
// error, 3 data error, 4 io/stage failure.

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "splitkit/compare.hpp"
#include "splitkit/errors.hpp"
#include "splitkit/eval.hpp"
#include "splitkit/experiment.hpp"
#include "splitkit/filter.hpp"
#include "splitkit/ingest.hpp"
#include "splitkit/io_util.hpp"
#include "splitkit/models.hpp"
#include "splitkit/split.hpp"
#include "splitkit/synth.hpp"
#include "splitkit/version.hpp"

namespace fs = std::filesystem;
using splitkit::ConfigError;
using splitkit::DataError;
using splitkit::IoError;
using json = nlohmann::ordered_json;

namespace {

void print_dataset_summary(const splitkit::Dataset& d) {
  std::printf("users %u  items %u  baskets %u  interactions %zu\n",
              d.user_count(), d.item_count(), d.basket_count(), d.size());
  std::printf("digest %s  granularity %s\n", d.content_digest().c_str(),
              d.timestamp_granularity().c_str());
}

splitkit::TimestampFormat parse_time_format(const std::string& text) {
  if (text == "auto") return splitkit::TimestampFormat::kAuto;
  if (text == "epoch") return splitkit::TimestampFormat::kEpochSeconds;
  if (text == "iso") return splitkit::TimestampFormat::kIsoDate;
  throw ConfigError("unknown time format '" + text +
                    "' (expected auto, epoch or iso)");
}

splitkit::BasketPolicy parse_basket_policy(const std::string& text) {
  if (text == "reject") return splitkit::BasketPolicy::kReject;
  if (text == "split") return splitkit::BasketPolicy::kSplit;
  throw ConfigError("unknown basket policy '" + text +
                    "' (expected reject or split)");
}

splitkit::Hyperparameters load_hp_file(const fs::path& path) {
  splitkit::Hyperparameters hp;
  if (path.empty()) return hp;
  json j;
  try {
    j = json::parse(splitkit::read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse hyperparameter file " + path.string() +
                      ": " + e.what());
  }
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "embedding_dim") {
        hp.embedding_dim = value.get<std::size_t>();
      } else if (key == "learning_rate") {
        hp.learning_rate = value.get<double>();
      } else if (key == "epochs") {
        hp.epochs = value.get<std::size_t>();
      } else if (key == "negatives_per_positive") {
        hp.negatives_per_positive = value.get<std::size_t>();
      } else if (key == "regularization") {
        hp.regularization = value.get<double>();
      } else if (key == "neighborhood_size") {
        hp.neighborhood_size = value.get<std::size_t>();
      } else {
        throw ConfigError("unknown hyperparameter '" + key + "' in " +
                          path.string());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad hyperparameter value in " + path.string() + ": " +
                      e.what());
  }
  return hp;
}

struct IngestArgs {
  std::string input;
  std::string out;
  std::string user_col = "user";
  std::string item_col = "item";
  std::string time_col = "timestamp";
  std::vector<std::string> basket_cols;
  std::string quantity_col;
  std::string delimiter = ",";
  bool no_header = false;
  std::string time_format = "auto";
  std::string basket_policy = "reject";
  bool gzip = false;
};

int cmd_ingest(const IngestArgs& args) {
  splitkit::SchemaConfig schema;
  schema.user_column = args.user_col;
  schema.item_column = args.item_col;
  schema.timestamp_column = args.time_col;
  schema.basket_columns = args.basket_cols;
  schema.quantity_column = args.quantity_col;
  if (args.delimiter.size() != 1) {
    throw ConfigError("delimiter must be a single character");
  }
  schema.delimiter = args.delimiter[0];
  schema.has_header = !args.no_header;
  schema.timestamp_format = parse_time_format(args.time_format);
  schema.basket_policy = parse_basket_policy(args.basket_policy);

  const splitkit::Dataset dataset =
      splitkit::parse_transactions_file(args.input, schema);
  splitkit::export_dataset(dataset, args.out, args.gzip);
  print_dataset_summary(dataset);
  std::printf("wrote %s\n", args.out.c_str());
  return 0;
}

struct SynthArgs {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

int cmd_synth(const SynthArgs& args) {
  splitkit::SynthConfig config =
      splitkit::synth_config_from_json(splitkit::read_text(args.config));
  if (args.seed_given) config.seed = args.seed;
  const splitkit::Dataset dataset = splitkit::generate(config);
  splitkit::export_synth(config, dataset, args.out);
  print_dataset_summary(dataset);
  std::printf("wrote %s\n", args.out.c_str());
  return 0;
}

struct FilterArgs {
  std::string input;
  std::string out;
  std::uint32_t min_item_purchases = 0;
  std::uint32_t min_user_items = 0;
  std::uint32_t min_user_baskets = 0;
  std::string order = "items-first";
  bool fixpoint = false;
  std::string strategy;
  bool gzip = false;
};

int cmd_filter(const FilterArgs& args) {
  splitkit::FilterSpec spec;
  if (!args.strategy.empty()) {
    spec = splitkit::builtin_spec(splitkit::parse_strategy_tag(args.strategy));
  } else {
    spec.min_item_purchases = args.min_item_purchases;
    spec.min_user_items = args.min_user_items;
    spec.min_user_baskets = args.min_user_baskets;
    spec.order = splitkit::parse_filter_order(args.order);
    spec.iterate_to_fixpoint = args.fixpoint;
  }
  const splitkit::Dataset dataset = splitkit::load_dataset(args.input);
  std::printf("before: ");
  print_dataset_summary(dataset);
  const splitkit::Dataset filtered = splitkit::apply_filter(dataset, spec);
  std::printf("after:  ");
  print_dataset_summary(filtered);
  splitkit::export_dataset(filtered, args.out, args.gzip);
  std::printf("wrote %s\n", args.out.c_str());
  return 0;
}

struct SplitArgs {
  std::string data;
  std::string out;
  std::string strategy;
  double test_ratio = 0.2;
  double valid_ratio = 0.2;
  double fold_in_ratio = 0.5;
  std::uint64_t seed = 0;
  bool intersection = false;
  bool by_interactions = false;
};

int cmd_split(const SplitArgs& args) {
  splitkit::SplitStrategy strategy;
  strategy.tag = splitkit::parse_strategy_tag(args.strategy);
  strategy.test_ratio = args.test_ratio;
  strategy.valid_ratio = args.valid_ratio;
  strategy.fold_in_ratio = args.fold_in_ratio;
  strategy.seed = args.seed;
  strategy.intersection_filter = args.intersection;
  strategy.boundary_by_interactions = args.by_interactions;
  splitkit::validate_strategy(strategy);

  const splitkit::Dataset dataset = splitkit::load_dataset(args.data);
  const splitkit::SplitResult split = splitkit::run_split(dataset, strategy);
  splitkit::export_split(split, args.out);
  const splitkit::SplitManifest& m = split.manifest;
  std::printf("strategy %s\n",
              splitkit::strategy_tag_name(strategy.tag).c_str());
  std::printf("train %llu  validation %llu  test %llu  dropped %llu\n",
              static_cast<unsigned long long>(m.train.interactions),
              static_cast<unsigned long long>(m.validation.interactions),
              static_cast<unsigned long long>(m.test.interactions),
              static_cast<unsigned long long>(m.dropped_interactions));
  std::printf("leakage_fraction %.6f  boundary %s\n",
              m.leakage.leakage_fraction, m.leakage.boundary_type.c_str());
  std::printf("wrote %s\n", args.out.c_str());
  return 0;
}

struct TrainArgs {
  std::string model;
  std::string split;
  std::string data;
  std::string hp_file;
  std::string out;
  std::uint64_t seed = 0;
};

int cmd_train(const TrainArgs& args) {
  const splitkit::ModelKind kind = splitkit::parse_model_kind(args.model);
  const splitkit::Hyperparameters hp = load_hp_file(args.hp_file);
  splitkit::validate_hyperparameters(kind, hp);
  const splitkit::Dataset dataset = splitkit::load_dataset(args.data);
  const splitkit::SplitResult split = splitkit::load_split(args.split, dataset);
  auto model = splitkit::make_recommender(kind);
  model->fit(dataset, split.train, split.validation, hp, args.seed);
  model->save(args.out);
  std::printf("model %s  digest %s\n",
              splitkit::model_kind_name(kind).c_str(),
              model->digest().c_str());
  const std::vector<double> curve = model->training_curve();
  if (!curve.empty()) {
    std::printf("loss %.6f -> %.6f over %zu entries\n", curve.front(),
                curve.back(), curve.size());
  }
  std::printf("wrote %s\n", args.out.c_str());
  return 0;
}

struct EvalArgs {
  std::string model_ckpt;
  std::string split;
  std::string data;
  std::string out;
  std::string model_id;
  std::size_t k = 10;
  std::string candidates = "full";
  std::size_t sampled_negatives = 100;
  std::uint64_t seed = 0;
  bool no_exclude_train = false;
  std::string granularity = "item";
  bool truncated_recall = false;
};

int cmd_eval(const EvalArgs& args) {
  splitkit::EvalConfig config;
  config.k = args.k;
  config.candidate_mode = splitkit::parse_candidate_mode(args.candidates);
  config.sampled_negatives = args.sampled_negatives;
  config.seed = args.seed;
  config.exclude_train_items = !args.no_exclude_train;
  config.granularity = splitkit::parse_granularity(args.granularity);
  config.truncated_recall = args.truncated_recall;

  const splitkit::Dataset dataset = splitkit::load_dataset(args.data);
  const splitkit::SplitResult split = splitkit::load_split(args.split, dataset);
  const auto model = splitkit::load_model(args.model_ckpt);
  const std::string model_id = args.model_id.empty()
                                   ? splitkit::model_kind_name(model->kind())
                                   : args.model_id;
  const splitkit::EvalReport report =
      splitkit::evaluate(*model, dataset, split, config, model_id);
  splitkit::write_report_json(report, args.out + ".json");
  splitkit::write_report_csv(report, args.out + ".csv");
  std::printf("evaluated %llu users  ndcg@%zu %.6f  recall@%zu %.6f\n",
              static_cast<unsigned long long>(report.evaluated_users),
              config.k, report.mean_ndcg, config.k, report.mean_recall);
  std::printf("wrote %s.json %s.csv\n", args.out.c_str(), args.out.c_str());
  return 0;
}

struct CompareArgs {
  std::vector<std::string> reports;
  std::string reference = "leave-one-last-item";
  std::string metric = "ndcg";
  std::string out;
  std::string scatter_dir;
};

int cmd_compare(const CompareArgs& args) {
  std::vector<splitkit::EvalReport> reports;
  for (const std::string& path : args.reports) {
    reports.push_back(splitkit::load_report_json(path));
  }
  const splitkit::Metric metric = splitkit::parse_metric(args.metric);
  const std::string reference = splitkit::strategy_tag_name(
      splitkit::parse_strategy_tag(args.reference));
  const splitkit::RankSwapReport report =
      splitkit::rank_swap_report(reports, metric, reference);
  const std::string table = splitkit::render_table(report);
  std::fputs(table.c_str(), stdout);
  if (!args.out.empty()) {
    splitkit::write_comparison_json(report, args.out + ".json");
    splitkit::write_comparison_csv(report, args.out + ".csv");
    splitkit::write_text(args.out + ".txt", table);
    std::printf("wrote %s.{json,csv,txt}\n", args.out.c_str());
  }
  if (!args.scatter_dir.empty()) {
    for (std::size_t i = 0; i < report.rankings.size(); ++i) {
      for (std::size_t k = i + 1; k < report.rankings.size(); ++k) {
        const fs::path path =
            fs::path(args.scatter_dir) / (report.rankings[i].strategy + "__" +
                                          report.rankings[k].strategy +
                                          ".csv");
        splitkit::write_scatter_csv(report.rankings[i], report.rankings[k],
                                    path);
      }
    }
    std::printf("wrote scatter rows to %s\n", args.scatter_dir.c_str());
  }
  return 0;
}

struct RunArgs {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_given = false;
  unsigned threads = 0;
  bool threads_given = false;
};

int cmd_run(const RunArgs& args) {
  const fs::path config_path = args.config;
  splitkit::ExperimentConfig config = splitkit::validate_config(
      splitkit::read_text(config_path),
      config_path.has_parent_path() ? config_path.parent_path()
                                    : fs::current_path());
  if (!args.out.empty()) config.out_dir = args.out;
  if (args.seed_given) config.seed = args.seed;
  if (args.threads_given) config.threads = args.threads;
  if (config.out_dir.empty()) {
    throw ConfigError("no output directory: set \"out\" in the config or "
                      "pass --out");
  }
  const splitkit::ExperimentResult result = splitkit::run_experiment(config);
  std::printf("reports %llu\n",
              static_cast<unsigned long long>(result.report_count));
  for (const splitkit::RankSwapReport& cmp : result.comparisons) {
    for (const splitkit::RankComparison& pair : cmp.comparisons) {
      std::printf("tau[%s] %s vs %s: %.4f\n", cmp.metric.c_str(),
                  pair.strategy_a.c_str(), pair.strategy_b.c_str(),
                  pair.tau.tau);
    }
  }
  std::printf("bundle %s\ndigest %s\n", result.bundle_dir.string().c_str(),
              result.bundle_digest.c_str());
  return 0;
}

void print_manifest_json(const json& j) {
  if (j.contains("partitions")) {
    std::printf("split manifest (format %d, toolkit %s)\n",
                j.value("format_version", 0),
                j.value("toolkit_version", std::string("?")).c_str());
    std::printf("strategy %s\n",
                j.at("strategy").value("tag", std::string("?")).c_str());
    std::printf("dataset %s\n",
                j.value("dataset_digest", std::string("?")).c_str());
    for (const char* part : {"train", "validation", "test"}) {
      const json& p = j.at("partitions").at(part);
      std::printf(
          "%-10s users %llu  items %llu  baskets %llu  interactions %llu\n",
          part, p.at("users").get<unsigned long long>(),
          p.at("items").get<unsigned long long>(),
          p.at("baskets").get<unsigned long long>(),
          p.at("interactions").get<unsigned long long>());
    }
    std::printf("dropped %llu\n",
                j.at("dropped").at("total").get<unsigned long long>());
    std::printf("leakage_fraction %.6f  boundary %s\n",
                j.at("leakage").at("fraction").get<double>(),
                j.at("leakage")
                    .value("boundary_type", std::string("?"))
                    .c_str());
  } else if (j.contains("files")) {
    std::printf("experiment bundle (toolkit %s)\n",
                j.value("toolkit_version", std::string("?")).c_str());
    std::printf("config_digest %s\n",
                j.value("config_digest", std::string("?")).c_str());
    std::printf("dataset_digest %s\n",
                j.value("dataset_digest", std::string("?")).c_str());
    std::printf("files %zu\n", j.at("files").size());
    std::printf("bundle_digest %s\n",
                j.value("bundle_digest", std::string("?")).c_str());
  } else if (j.contains("per_user")) {
    std::printf("eval report: model %s  strategy %s\n",
                j.value("model_id", std::string("?")).c_str(),
                j.value("strategy", std::string("?")).c_str());
    std::printf("evaluated_users %llu  mean_ndcg %.6f  mean_recall %.6f\n",
                j.at("evaluated_users").get<unsigned long long>(),
                j.at("mean_ndcg").get<double>(),
                j.at("mean_recall").get<double>());
  } else if (j.contains("windows")) {
    std::printf("synth config: %u users, %u items, horizon %lld, %zu "
                "windows, seed %llu\n",
                j.at("n_users").get<std::uint32_t>(),
                j.at("n_items").get<std::uint32_t>(),
                j.at("horizon").get<long long>(), j.at("windows").size(),
                j.at("seed").get<unsigned long long>());
  } else {
    std::printf("unrecognized manifest; top-level fields:\n");
    for (const auto& [key, _] : j.items()) std::printf("  %s\n", key.c_str());
  }
}

int cmd_manifest(const std::string& target) {
  const fs::path p = target;
  fs::path file;
  if (fs::is_directory(p)) {
    if (fs::exists(p / "manifest.json")) {
      file = p / "manifest.json";
    } else if (fs::exists(p / "bundle.json")) {
      file = p / "bundle.json";
    } else if (fs::exists(p / "interactions.csv") ||
               fs::exists(p / "interactions.csv.gz")) {
      const splitkit::Dataset dataset = splitkit::load_dataset(p);
      print_dataset_summary(dataset);
      return 0;
    } else {
      throw IoError("nothing inspectable in " + p.string());
    }
  } else if (fs::exists(p)) {
    file = p;
  } else {
    throw IoError("no such path: " + p.string());
  }
  json j;
  try {
    j = json::parse(splitkit::read_text(file));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("cannot parse " + file.string() + ": " + e.what());
  }
  print_manifest_json(j);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"splitkit: dataset splitting and rank-swap evaluation"};
  app.set_version_flag("--version", std::string(splitkit::kVersion));
  app.require_subcommand(1);

  IngestArgs ingest;
  auto* ingest_cmd =
      app.add_subcommand("ingest", "parse a transaction log into the "
                                   "canonical dataset layout");
  ingest_cmd->add_option("input", ingest.input, "delimited transaction log")
      ->required();
  ingest_cmd->add_option("--out", ingest.out, "output dataset directory")
      ->required();
  ingest_cmd->add_option("--user-col", ingest.user_col,
                         "user column (name or 0-based index)");
  ingest_cmd->add_option("--item-col", ingest.item_col, "item column");
  ingest_cmd->add_option("--time-col", ingest.time_col, "timestamp column");
  ingest_cmd->add_option("--basket-col", ingest.basket_cols,
                         "basket column(s), repeatable for composite keys");
  ingest_cmd->add_option("--quantity-col", ingest.quantity_col,
                         "quantity column (default: every row counts 1)");
  ingest_cmd->add_option("--delimiter", ingest.delimiter, "field delimiter");
  ingest_cmd->add_flag("--no-header", ingest.no_header,
                       "columns are 0-based indices");
  ingest_cmd->add_option("--time-format", ingest.time_format,
                         "auto, epoch or iso");
  ingest_cmd->add_option("--basket-policy", ingest.basket_policy,
                         "reject or split inconsistent baskets");
  ingest_cmd->add_flag("--gzip", ingest.gzip, "gzip the exported rows");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand(
      "synth", "generate a drifted synthetic transaction log");
  synth_cmd->add_option("--config", synth.config, "synth config JSON")
      ->required();
  synth_cmd->add_option("--out", synth.out, "output dataset directory")
      ->required();
  auto* synth_seed =
      synth_cmd->add_option("--seed", synth.seed, "override the config seed");

  FilterArgs filter;
  auto* filter_cmd =
      app.add_subcommand("filter", "apply frequency filters to a dataset");
  filter_cmd->add_option("input", filter.input, "dataset directory")
      ->required();
  filter_cmd->add_option("--out", filter.out, "output dataset directory")
      ->required();
  filter_cmd->add_option("--min-item-purchases", filter.min_item_purchases,
                         "drop items with fewer interactions");
  filter_cmd->add_option("--min-user-items", filter.min_user_items,
                         "drop users with fewer interactions");
  filter_cmd->add_option("--min-user-baskets", filter.min_user_baskets,
                         "drop users with fewer baskets");
  filter_cmd->add_option("--filter-order", filter.order,
                         "items-first or users-first");
  filter_cmd->add_flag("--filter-fixpoint", filter.fixpoint,
                       "re-run both passes until stable");
  filter_cmd->add_option("--strategy", filter.strategy,
                         "use the builtin filter for this strategy");
  filter_cmd->add_flag("--gzip", filter.gzip, "gzip the exported rows");

  SplitArgs split;
  auto* split_cmd =
      app.add_subcommand("split", "materialize one splitting strategy");
  split_cmd->add_option("data", split.data, "dataset directory")->required();
  split_cmd->add_option("--strategy", split.strategy, "strategy tag")
      ->required();
  split_cmd->add_option("--out", split.out, "output split directory")
      ->required();
  split_cmd->add_option("--test-ratio", split.test_ratio, "test share");
  split_cmd->add_option("--valid-ratio", split.valid_ratio,
                        "validation share (carved from the training side)");
  split_cmd->add_option("--fold-in-ratio", split.fold_in_ratio,
                        "user-split fold-in share");
  split_cmd->add_option("--seed", split.seed, "seed for seeded strategies");
  split_cmd->add_flag("--intersection", split.intersection,
                      "drop test rows with cold users or items");
  split_cmd->add_flag("--boundary-by-interactions", split.by_interactions,
                      "temporal-global boundary by interaction count");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "fit a baseline recommender");
  train_cmd->add_option("--model", train.model, "pop, itemknn, mfbpr or nmf")
      ->required();
  train_cmd->add_option("--split", train.split, "split directory")
      ->required();
  train_cmd->add_option("--data", train.data, "dataset directory")
      ->required();
  train_cmd->add_option("--hp", train.hp_file, "hyperparameter JSON file");
  train_cmd->add_option("--out", train.out, "checkpoint path")->required();
  train_cmd->add_option("--seed", train.seed, "training seed");

  EvalArgs eval;
  auto* eval_cmd =
      app.add_subcommand("eval", "rank and score a trained model");
  eval_cmd->add_option("--model-ckpt", eval.model_ckpt, "checkpoint path")
      ->required();
  eval_cmd->add_option("--split", eval.split, "split directory")->required();
  eval_cmd->add_option("--data", eval.data, "dataset directory")->required();
  eval_cmd->add_option("--out", eval.out, "report path prefix")->required();
  eval_cmd->add_option("--model-id", eval.model_id,
                       "system name in reports (default: model kind)");
  eval_cmd->add_option("--k", eval.k, "ranking cutoff");
  eval_cmd->add_option("--candidates", eval.candidates, "full or sampled");
  eval_cmd->add_option("--sampled-negatives", eval.sampled_negatives,
                       "negatives per user in sampled mode");
  eval_cmd->add_option("--seed", eval.seed, "negative sampling seed");
  eval_cmd->add_flag("--no-exclude-train", eval.no_exclude_train,
                     "keep already-seen items in the candidate set");
  eval_cmd->add_option("--granularity", eval.granularity,
                       "item or basket-union");
  eval_cmd->add_flag("--truncated-recall", eval.truncated_recall,
                     "divide recall by min(|relevant|, k)");

  CompareArgs compare;
  auto* compare_cmd = app.add_subcommand(
      "compare", "rank-swap table and Kendall tau across strategies");
  compare_cmd
      ->add_option("--reports", compare.reports, "eval report JSON files")
      ->required()
      ->expected(-2);
  compare_cmd->add_option("--reference", compare.reference,
                          "reference strategy for the table rows");
  compare_cmd->add_option("--metric", compare.metric, "ndcg or recall");
  compare_cmd->add_option("--out", compare.out,
                          "output prefix for .txt/.json/.csv");
  compare_cmd->add_option("--scatter-dir", compare.scatter_dir,
                          "directory for per-pair scatter CSVs");

  RunArgs run;
  auto* run_cmd =
      app.add_subcommand("run", "end-to-end experiment from a config file");
  run_cmd->add_option("--config", run.config, "experiment config JSON")
      ->required();
  run_cmd->add_option("--out", run.out, "bundle output directory");
  auto* run_seed =
      run_cmd->add_option("--seed", run.seed, "override the config seed");
  auto* run_threads = run_cmd->add_option("--threads", run.threads,
                                          "worker threads (0 = hardware)");

  std::string manifest_target;
  auto* manifest_cmd = app.add_subcommand(
      "manifest", "inspect a dataset, split, report or bundle");
  manifest_cmd->add_option("path", manifest_target, "path to inspect")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*ingest_cmd) return cmd_ingest(ingest);
    if (*synth_cmd) {
      synth.seed_given = synth_seed->count() > 0;
      return cmd_synth(synth);
    }
    if (*filter_cmd) return cmd_filter(filter);
    if (*split_cmd) return cmd_split(split);
    if (*train_cmd) return cmd_train(train);
    if (*eval_cmd) return cmd_eval(eval);
    if (*compare_cmd) return cmd_compare(compare);
    if (*run_cmd) {
      run.seed_given = run_seed->count() > 0;
      run.threads_given = run_threads->count() > 0;
      return cmd_run(run);
    }
    if (*manifest_cmd) return cmd_manifest(manifest_target);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const splitkit::StageError& e) {
    std::fprintf(stderr, "stage failure: %s\n", e.what());
    return 4;
  } catch (const splitkit::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
  return 0;
}

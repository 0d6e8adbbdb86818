#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "splitkit/compare.hpp"
#include "splitkit/eval.hpp"
#include "splitkit/filter.hpp"
#include "splitkit/models.hpp"
#include "splitkit/split.hpp"
#include "splitkit/synth.hpp"

namespace splitkit {

struct StrategyEntry {
  SplitStrategy strategy;
  // When false the split seed is derived from the experiment seed.
  bool seed_explicit = false;
};

// One trained system: a model kind at a fixed hyperparameter point.
// system_id is the plain kind name when the kind occurs once in the
// config, else kind#<first 8 digest hex>.
struct ModelPoint {
  ModelKind kind = ModelKind::kPopularity;
  Hyperparameters hp;
  std::string system_id;
};

struct ExperimentConfig {
  std::string dataset_path;  // empty when synth is set
  std::optional<SynthConfig> synth;
  std::optional<FilterSpec> filter;  // absent: builtin spec per strategy
  std::vector<StrategyEntry> strategies;
  std::vector<ModelPoint> models;
  EvalConfig eval;
  std::vector<Metric> metrics;
  std::string reference = "leave-one-last-item";
  std::filesystem::path out_dir;
  std::uint64_t seed = 0;
  unsigned threads = 1;  // 0 picks the hardware thread count
};

// Parses and validates a config document, resolving every default.
// Collects all problems and throws one ConfigError listing each with
// its JSON path. Relative dataset paths resolve against base_dir.
ExperimentConfig validate_config(std::string_view json_text,
                                 const std::filesystem::path& base_dir);

// Canonical normalized echo. Seeds are resolved; execution-only
// parameters (out, threads) are not part of the experiment identity
// and are omitted.
std::string experiment_config_to_json(const ExperimentConfig& config);

struct ExperimentResult {
  std::filesystem::path bundle_dir;
  std::string bundle_digest;
  std::uint64_t report_count = 0;
  std::vector<RankSwapReport> comparisons;  // one per metric
};

ExperimentResult run_experiment(const ExperimentConfig& config);

}  // namespace splitkit

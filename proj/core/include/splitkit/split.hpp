#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "splitkit/dataset.hpp"
#include "splitkit/strategy.hpp"

namespace splitkit {

// Parameters for one split. Ratios must lie strictly inside (0,1);
// fold_in_ratio may be 0 (cohort users then contribute no history).
// For user-split, test_ratio is the fraction of users placed in the
// test cohort rather than a fraction of interactions.
struct SplitStrategy {
  StrategyTag tag = StrategyTag::kLeaveOneLastItem;
  double test_ratio = 0.2;
  double valid_ratio = 0.2;
  std::uint64_t seed = 0;
  double fold_in_ratio = 0.5;  // user-split only

  // Drop validation/test rows whose user or item is unseen in train.
  // Always on for temporal-global and user-split fold-out; optional for
  // the per-user strategies, which by default keep cold items in test.
  bool intersection_filter = false;

  // temporal-global: measure the test_ratio/valid_ratio cut by
  // interaction count instead of basket count.
  bool boundary_by_interactions = false;

  bool operator==(const SplitStrategy&) const = default;
};

// Throws ConfigError when ratios or seed requirements are violated.
void validate_strategy(const SplitStrategy& strategy);

struct PartitionStats {
  std::uint64_t users = 0;
  std::uint64_t items = 0;
  std::uint64_t baskets = 0;
  std::uint64_t interactions = 0;
  std::string digest;  // of the partition's index file bytes

  bool operator==(const PartitionStats&) const = default;
};

struct LeakageReport {
  double leakage_fraction = 0.0;
  std::int64_t per_user_boundary_spread = 0;
  std::string boundary_type;  // "per-user" or "global"

  bool operator==(const LeakageReport&) const = default;
};

struct SplitManifest {
  int format_version = 0;
  std::string toolkit_version;
  std::string dataset_digest;
  SplitStrategy strategy;
  PartitionStats train;
  PartitionStats validation;
  PartitionStats test;
  std::optional<Timestamp> boundary_timestamp;  // temporal-global only
  std::uint64_t dropped_interactions = 0;
  std::map<std::string, std::uint64_t> dropped_reasons;
  LeakageReport leakage;
  // user-split stores fold-in history in the validation partition.
  bool fold_in_validation = false;

  bool operator==(const SplitManifest&) const = default;
};

// Interaction row indices into the source dataset, each vector sorted
// ascending. A row missing from all three partitions was dropped for
// one of the manifest's recorded reasons.
struct SplitResult {
  std::vector<std::uint32_t> train;
  std::vector<std::uint32_t> validation;
  std::vector<std::uint32_t> test;
  SplitStrategy strategy;
  SplitManifest manifest;
};

// Single entry point driven by strategy.tag. The dataset is expected to
// be filtered already; splitters never apply frequency filters.
SplitResult run_split(const Dataset& dataset, const SplitStrategy& strategy);

// Convenience wrappers over run_split, one per strategy.
SplitResult split_leave_one_last_item(const Dataset& dataset,
                                      bool intersection = false);
SplitResult split_leave_one_last_basket(const Dataset& dataset,
                                        bool intersection = false);
SplitResult split_temporal_user(const Dataset& dataset, double test_ratio,
                                double valid_ratio);
SplitResult split_temporal_global(const Dataset& dataset, double test_ratio,
                                  double valid_ratio,
                                  bool by_interactions = false);
SplitResult split_random(const Dataset& dataset, StrategyTag mode,
                         std::uint64_t seed, double test_ratio = 0.2,
                         double valid_ratio = 0.2);
SplitResult split_user(const Dataset& dataset, double test_user_ratio,
                       double fold_in_ratio, std::uint64_t seed);

// Leakage of future evidence into train: the fraction of train rows
// timestamped after the earliest test row. Throws DataError when the
// split has no test rows.
LeakageReport leakage_report(const SplitResult& split, const Dataset& dataset);

// Writes train.idx / validation.idx / test.idx plus manifest.json.
void export_split(const SplitResult& split, const std::filesystem::path& dir);

// Re-reads an exported split, re-verifying the manifest's digests and
// counts against the index files and the given dataset.
SplitResult load_split(const std::filesystem::path& dir,
                       const Dataset& dataset);

}  // namespace splitkit

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "splitkit/eval.hpp"

namespace splitkit {

enum class Metric { kNdcg, kRecall };

Metric parse_metric(std::string_view text);
std::string metric_name(Metric metric);

// Tie-corrected Kendall tau-b with the full pair breakdown.
struct TauDetail {
  double tau = 0.0;
  std::uint64_t concordant = 0;
  std::uint64_t discordant = 0;
  std::uint64_t ties_x_only = 0;
  std::uint64_t ties_y_only = 0;
  std::uint64_t ties_both = 0;

  bool operator==(const TauDetail&) const = default;
};

TauDetail kendall_tau_detail(std::span<const double> x,
                             std::span<const double> y);
double kendall_tau(std::span<const double> x, std::span<const double> y);

struct RankedEntry {
  std::string model;
  double score = 0.0;

  bool operator==(const RankedEntry&) const = default;
};

// One strategy's model ordering: entries descending by score, score
// ties broken by model id. Rank 1 is the first entry.
struct SystemRanking {
  std::string strategy;
  std::string metric;
  std::vector<RankedEntry> entries;
};

struct RankSwap {
  std::string model;
  // rank under strategy_a minus rank under strategy_b; positive means
  // the model moved up (gained rank) under strategy_b.
  std::int64_t displacement = 0;

  bool operator==(const RankSwap&) const = default;
};

struct RankComparison {
  std::string strategy_a;
  std::string strategy_b;
  TauDetail tau;
  std::vector<RankSwap> swaps;
};

struct RankSwapReport {
  std::string metric;
  std::string reference;
  std::vector<SystemRanking> rankings;
  std::vector<RankComparison> comparisons;
};

std::vector<SystemRanking> build_rankings(
    const std::vector<EvalReport>& reports, Metric metric);

RankComparison compare_rankings(const SystemRanking& a,
                                const SystemRanking& b);

RankSwapReport rank_swap_report(
    const std::vector<EvalReport>& reports, Metric metric,
    const std::string& reference = "leave-one-last-item");

std::string render_table(const RankSwapReport& report);

void write_comparison_json(const RankSwapReport& report,
                           const std::filesystem::path& path);
void write_comparison_csv(const RankSwapReport& report,
                          const std::filesystem::path& path);

// Paired scores per model between two strategies, one row per model:
// x_score,y_score,model,hp_digest
void write_scatter_csv(const SystemRanking& a, const SystemRanking& b,
                       const std::filesystem::path& path);

}  // namespace splitkit

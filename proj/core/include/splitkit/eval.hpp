#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_set>
#include <vector>

#include "splitkit/dataset.hpp"
#include "splitkit/models.hpp"
#include "splitkit/split.hpp"

namespace splitkit {

enum class CandidateMode { kFull, kSampled };

CandidateMode parse_candidate_mode(std::string_view text);
std::string candidate_mode_name(CandidateMode mode);

// Relevance granularity is echoed in reports; with binary item
// relevance both readings produce the same distinct-item union.
enum class RelevanceGranularity { kItem, kBasketUnion };

RelevanceGranularity parse_granularity(std::string_view text);
std::string granularity_name(RelevanceGranularity g);

struct EvalConfig {
  std::size_t k = 10;
  CandidateMode candidate_mode = CandidateMode::kFull;
  std::size_t sampled_negatives = 100;  // sampled mode only
  std::uint64_t seed = 0;               // sampled mode only
  bool exclude_train_items = true;
  RelevanceGranularity granularity = RelevanceGranularity::kItem;
  bool truncated_recall = false;

  bool operator==(const EvalConfig&) const = default;
};

struct UserMetrics {
  std::string user;  // external id
  double ndcg = 0.0;
  double recall = 0.0;
  std::uint64_t relevant = 0;

  bool operator==(const UserMetrics&) const = default;
};

struct EvalReport {
  int format_version = 0;
  std::string toolkit_version;
  std::string model_id;
  std::string model_digest;
  std::string strategy;
  std::string dataset_digest;
  EvalConfig config;
  std::vector<UserMetrics> per_user;  // dense user order
  double mean_ndcg = 0.0;
  double mean_recall = 0.0;
  std::uint64_t evaluated_users = 0;
  std::uint64_t skipped_no_history = 0;
  std::uint64_t skipped_empty_relevant = 0;
};

// Distinct items in the user's test rows.
std::unordered_set<ItemId> relevant_set(
    const SplitResult& split, const Dataset& dataset, UserId user,
    RelevanceGranularity granularity = RelevanceGranularity::kItem);

// Candidate items for one user, ordered by descending model score with
// ascending-index tie break. Full mode ranks the train item universe
// (minus the user's seen items when excluded); sampled mode ranks the
// relevant items plus seeded uniform negatives.
std::vector<ItemId> rank_for_user(const Recommender& model, UserId user,
                                  const Dataset& dataset,
                                  const SplitResult& split,
                                  const EvalConfig& config);

// Scores every user holding test rows. Users without usable history
// (and, under user-split, without a fold-in path for this model) are
// skipped and counted. Throws DataError when nobody is evaluable.
EvalReport evaluate(const Recommender& model, const Dataset& dataset,
                    const SplitResult& split, const EvalConfig& config,
                    const std::string& model_id);

void write_report_json(const EvalReport& report,
                       const std::filesystem::path& path);
// One row per evaluated user: user, ndcg, recall, relevant.
void write_report_csv(const EvalReport& report,
                      const std::filesystem::path& path);
EvalReport load_report_json(const std::filesystem::path& path);

}  // namespace splitkit

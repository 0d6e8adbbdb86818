#include "splitkit/eval.hpp"

#include <algorithm>
#include <cstdio>

#include <json.hpp>

#include "splitkit/errors.hpp"
#include "splitkit/io_util.hpp"
#include "splitkit/metrics.hpp"
#include "splitkit/rng.hpp"
#include "splitkit/version.hpp"

namespace splitkit {

namespace {

using json = nlohmann::ordered_json;

struct UserContext {
  std::vector<ItemId> train_items;    // distinct, sorted
  std::vector<ItemId> fold_in_items;  // distinct, chronological source order
  std::unordered_set<ItemId> relevant;
};

// Sorted candidate construction keeps the final ordering a pure
// function of the scores, independent of build order.
std::vector<ItemId> order_by_score(std::vector<ItemId> candidates,
                                   const std::vector<double>& scores) {
  std::sort(candidates.begin(), candidates.end(),
            [&scores](ItemId a, ItemId b) {
              const double sa = a < scores.size() ? scores[a] : 0.0;
              const double sb = b < scores.size() ? scores[b] : 0.0;
              if (sa != sb) return sa > sb;
              return a < b;
            });
  return candidates;
}

std::vector<ItemId> universe_items(const Dataset& dataset,
                                   const std::vector<std::uint32_t>& train) {
  std::vector<char> seen(dataset.item_count(), 0);
  for (std::uint32_t i : train) seen[dataset.interactions[i].item] = 1;
  std::vector<ItemId> items;
  for (ItemId i = 0; i < seen.size(); ++i) {
    if (seen[i]) items.push_back(i);
  }
  return items;
}

std::vector<ItemId> build_candidates(
    const std::vector<ItemId>& universe, const UserContext& ctx,
    const std::unordered_set<ItemId>& exclude, const EvalConfig& config,
    const std::string& user_ext) {
  if (config.candidate_mode == CandidateMode::kFull) {
    std::vector<ItemId> candidates;
    candidates.reserve(universe.size());
    for (ItemId i : universe) {
      if (!exclude.count(i)) candidates.push_back(i);
    }
    return candidates;
  }
  // Sampled mode: every relevant item plus seeded uniform negatives
  // drawn from the universe outside the relevant and excluded sets.
  std::vector<ItemId> candidates(ctx.relevant.begin(), ctx.relevant.end());
  std::sort(candidates.begin(), candidates.end());
  std::unordered_set<ItemId> taken(candidates.begin(), candidates.end());
  std::size_t pool = 0;
  for (ItemId i : universe) {
    if (!taken.count(i) && !exclude.count(i)) ++pool;
  }
  const std::size_t want = std::min(config.sampled_negatives, pool);
  Rng rng(derive_seed(config.seed, {"eval-candidates", user_ext}));
  std::size_t drawn = 0;
  while (drawn < want) {
    const ItemId i = universe[rng.below(universe.size())];
    if (taken.count(i) || exclude.count(i)) continue;
    taken.insert(i);
    candidates.push_back(i);
    ++drawn;
  }
  std::sort(candidates.begin(), candidates.end());
  return candidates;
}

// Scores for a user, or nullopt when the model has no path to score
// them (no train history and no usable fold-in).
std::optional<std::vector<double>> user_scores(const Recommender& model,
                                               UserId user,
                                               const UserContext& ctx,
                                               bool fold_in_validation) {
  if (!ctx.train_items.empty()) return model.score_all(user);
  if (fold_in_validation && !ctx.fold_in_items.empty()) {
    return model.score_from_history(std::span<const ItemId>(
        ctx.fold_in_items.data(), ctx.fold_in_items.size()));
  }
  return std::nullopt;
}

const std::unordered_set<ItemId>& exclusion_for(
    const UserContext& ctx, const EvalConfig& config,
    std::unordered_set<ItemId>& scratch) {
  static const std::unordered_set<ItemId> kEmpty;
  if (!config.exclude_train_items) return kEmpty;
  scratch.clear();
  const auto& seen =
      ctx.train_items.empty() ? ctx.fold_in_items : ctx.train_items;
  scratch.insert(seen.begin(), seen.end());
  return scratch;
}

std::vector<UserContext> build_contexts(const Dataset& dataset,
                                        const SplitResult& split) {
  std::vector<UserContext> ctx(dataset.user_count());
  for (std::uint32_t i : split.train) {
    const Interaction& x = dataset.interactions[i];
    ctx[x.user].train_items.push_back(x.item);
  }
  for (auto& c : ctx) {
    std::sort(c.train_items.begin(), c.train_items.end());
    c.train_items.erase(
        std::unique(c.train_items.begin(), c.train_items.end()),
        c.train_items.end());
  }
  if (split.manifest.fold_in_validation) {
    for (std::uint32_t i : split.validation) {
      const Interaction& x = dataset.interactions[i];
      auto& items = ctx[x.user].fold_in_items;
      if (std::find(items.begin(), items.end(), x.item) == items.end()) {
        items.push_back(x.item);
      }
    }
  }
  for (std::uint32_t i : split.test) {
    const Interaction& x = dataset.interactions[i];
    ctx[x.user].relevant.insert(x.item);
  }
  return ctx;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

CandidateMode parse_candidate_mode(std::string_view text) {
  if (text == "full") return CandidateMode::kFull;
  if (text == "sampled") return CandidateMode::kSampled;
  throw ConfigError("unknown candidate mode '" + std::string(text) +
                    "' (expected full or sampled)");
}

std::string candidate_mode_name(CandidateMode mode) {
  return mode == CandidateMode::kFull ? "full" : "sampled";
}

RelevanceGranularity parse_granularity(std::string_view text) {
  if (text == "item") return RelevanceGranularity::kItem;
  if (text == "basket-union") return RelevanceGranularity::kBasketUnion;
  throw ConfigError("unknown relevance granularity '" + std::string(text) +
                    "' (expected item or basket-union)");
}

std::string granularity_name(RelevanceGranularity g) {
  return g == RelevanceGranularity::kItem ? "item" : "basket-union";
}

std::unordered_set<ItemId> relevant_set(const SplitResult& split,
                                        const Dataset& dataset, UserId user,
                                        RelevanceGranularity) {
  std::unordered_set<ItemId> out;
  for (std::uint32_t i : split.test) {
    const Interaction& x = dataset.interactions[i];
    if (x.user == user) out.insert(x.item);
  }
  return out;
}

std::vector<ItemId> rank_for_user(const Recommender& model, UserId user,
                                  const Dataset& dataset,
                                  const SplitResult& split,
                                  const EvalConfig& config) {
  if (config.k == 0) throw ConfigError("eval cutoff K must be at least 1");
  const std::vector<UserContext> ctx = build_contexts(dataset, split);
  const std::vector<ItemId> universe = universe_items(dataset, split.train);
  const auto scores =
      user_scores(model, user, ctx[user], split.manifest.fold_in_validation);
  if (!scores) {
    throw DataError("user " + dataset.users.external(user) +
                    " has no history this model can score");
  }
  std::unordered_set<ItemId> scratch;
  const auto& exclude = exclusion_for(ctx[user], config, scratch);
  return order_by_score(
      build_candidates(universe, ctx[user], exclude, config,
                       dataset.users.external(user)),
      *scores);
}

EvalReport evaluate(const Recommender& model, const Dataset& dataset,
                    const SplitResult& split, const EvalConfig& config,
                    const std::string& model_id) {
  if (config.k == 0) throw ConfigError("eval cutoff K must be at least 1");
  if (config.candidate_mode == CandidateMode::kSampled &&
      config.sampled_negatives == 0) {
    throw ConfigError("sampled candidate mode needs at least 1 negative");
  }

  EvalReport report;
  report.format_version = kReportFormatVersion;
  report.toolkit_version = kVersion;
  report.model_id = model_id;
  report.model_digest = model.digest();
  report.strategy = strategy_tag_name(split.strategy.tag);
  report.dataset_digest = dataset.content_digest();
  report.config = config;

  const std::vector<UserContext> ctx = build_contexts(dataset, split);
  const std::vector<ItemId> universe = universe_items(dataset, split.train);
  const bool fold_in = split.manifest.fold_in_validation;

  std::vector<char> has_test(dataset.user_count(), 0);
  for (std::uint32_t i : split.test) has_test[dataset.interactions[i].user] = 1;

  double sum_ndcg = 0.0, sum_recall = 0.0;
  std::unordered_set<ItemId> scratch;
  for (UserId u = 0; u < dataset.user_count(); ++u) {
    if (!has_test[u]) continue;
    if (ctx[u].relevant.empty()) {
      ++report.skipped_empty_relevant;
      continue;
    }
    const auto scores = user_scores(model, u, ctx[u], fold_in);
    if (!scores) {
      ++report.skipped_no_history;
      continue;
    }
    const auto& exclude = exclusion_for(ctx[u], config, scratch);
    const std::vector<ItemId> ranked = order_by_score(
        build_candidates(universe, ctx[u], exclude, config,
                         dataset.users.external(u)),
        *scores);
    UserMetrics um;
    um.user = dataset.users.external(u);
    um.ndcg = ndcg_at_k(ranked, ctx[u].relevant, config.k);
    um.recall =
        recall_at_k(ranked, ctx[u].relevant, config.k, config.truncated_recall);
    um.relevant = ctx[u].relevant.size();
    sum_ndcg += um.ndcg;
    sum_recall += um.recall;
    report.per_user.push_back(std::move(um));
  }
  report.evaluated_users = report.per_user.size();
  if (report.evaluated_users == 0) {
    throw DataError("no evaluable user: every test user lacked history or "
                    "relevant items");
  }
  report.mean_ndcg = sum_ndcg / static_cast<double>(report.evaluated_users);
  report.mean_recall =
      sum_recall / static_cast<double>(report.evaluated_users);
  return report;
}

namespace {

json config_to_json(const EvalConfig& c) {
  json j;
  j["k"] = c.k;
  j["candidates"] = candidate_mode_name(c.candidate_mode);
  j["sampled_negatives"] = c.sampled_negatives;
  j["seed"] = c.seed;
  j["exclude_train_items"] = c.exclude_train_items;
  j["granularity"] = granularity_name(c.granularity);
  j["truncated_recall"] = c.truncated_recall;
  return j;
}

EvalConfig config_from_json(const json& j) {
  EvalConfig c;
  c.k = j.at("k").get<std::size_t>();
  c.candidate_mode =
      parse_candidate_mode(j.at("candidates").get<std::string>());
  c.sampled_negatives = j.at("sampled_negatives").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.exclude_train_items = j.at("exclude_train_items").get<bool>();
  c.granularity = parse_granularity(j.at("granularity").get<std::string>());
  c.truncated_recall = j.at("truncated_recall").get<bool>();
  return c;
}

}  // namespace

void write_report_json(const EvalReport& report,
                       const std::filesystem::path& path) {
  json j;
  j["format_version"] = report.format_version;
  j["toolkit_version"] = report.toolkit_version;
  j["model_id"] = report.model_id;
  j["model_digest"] = report.model_digest;
  j["strategy"] = report.strategy;
  j["dataset_digest"] = report.dataset_digest;
  j["config"] = config_to_json(report.config);
  j["mean_ndcg"] = report.mean_ndcg;
  j["mean_recall"] = report.mean_recall;
  j["evaluated_users"] = report.evaluated_users;
  j["skipped_no_history"] = report.skipped_no_history;
  j["skipped_empty_relevant"] = report.skipped_empty_relevant;
  json rows = json::array();
  for (const UserMetrics& um : report.per_user) {
    json row;
    row["user"] = um.user;
    row["ndcg"] = um.ndcg;
    row["recall"] = um.recall;
    row["relevant"] = um.relevant;
    rows.push_back(std::move(row));
  }
  j["per_user"] = std::move(rows);
  write_text(path, j.dump(2) + "\n");
}

void write_report_csv(const EvalReport& report,
                      const std::filesystem::path& path) {
  std::string out = "user,ndcg,recall,relevant\n";
  for (const UserMetrics& um : report.per_user) {
    out += escape_field(um.user, ',');
    out.push_back(',');
    out += fmt_double(um.ndcg);
    out.push_back(',');
    out += fmt_double(um.recall);
    out.push_back(',');
    out += std::to_string(um.relevant);
    out.push_back('\n');
  }
  write_text(path, out);
}

EvalReport load_report_json(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("cannot parse " + path.string() + ": " + e.what());
  }
  EvalReport report;
  try {
    report.format_version = j.at("format_version").get<int>();
    if (report.format_version != kReportFormatVersion) {
      throw IoError("unsupported report format version " +
                    std::to_string(report.format_version));
    }
    report.toolkit_version = j.at("toolkit_version").get<std::string>();
    report.model_id = j.at("model_id").get<std::string>();
    report.model_digest = j.at("model_digest").get<std::string>();
    report.strategy = j.at("strategy").get<std::string>();
    report.dataset_digest = j.at("dataset_digest").get<std::string>();
    report.config = config_from_json(j.at("config"));
    report.mean_ndcg = j.at("mean_ndcg").get<double>();
    report.mean_recall = j.at("mean_recall").get<double>();
    report.evaluated_users = j.at("evaluated_users").get<std::uint64_t>();
    report.skipped_no_history =
        j.at("skipped_no_history").get<std::uint64_t>();
    report.skipped_empty_relevant =
        j.at("skipped_empty_relevant").get<std::uint64_t>();
    for (const json& row : j.at("per_user")) {
      UserMetrics um;
      um.user = row.at("user").get<std::string>();
      um.ndcg = row.at("ndcg").get<double>();
      um.recall = row.at("recall").get<double>();
      um.relevant = row.at("relevant").get<std::uint64_t>();
      report.per_user.push_back(std::move(um));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed eval report " + path.string() + ": " + e.what());
  }
  return report;
}

}  // namespace splitkit

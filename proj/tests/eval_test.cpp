#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "splitkit/errors.hpp"
#include "splitkit/eval.hpp"
#include "splitkit/rng.hpp"

using namespace splitkit;

namespace {

// Scores come from a caller-supplied function; everything else is inert.
class ScriptedModel final : public Recommender {
 public:
  ScriptedModel(std::size_t users, std::size_t items,
                std::function<double(UserId, ItemId)> fn)
      : users_(users), items_(items), fn_(std::move(fn)) {}

  void fit(const Dataset&, const std::vector<std::uint32_t>&,
           const std::vector<std::uint32_t>&, const Hyperparameters&,
           std::uint64_t) override {}
  double score(UserId user, ItemId item) const override {
    return fn_(user, item);
  }
  ModelKind kind() const override { return ModelKind::kPopularity; }
  std::size_t user_count() const override { return users_; }
  std::size_t item_count() const override { return items_; }
  std::string serialize() const override { return "scripted\n"; }

 private:
  std::size_t users_;
  std::size_t items_;
  std::function<double(UserId, ItemId)> fn_;
};

Dataset l1i_fixture() {
  DatasetBuilder builder;
  builder.add("u1", "a", "b1", 1, 1);
  builder.add("u1", "b", "b2", 2, 1);
  builder.add("u1", "c", "b3", 3, 1);
  return builder.build();
}

SplitResult manual_split(const Dataset& data,
                         const std::set<std::uint32_t>& test_rows) {
  SplitResult split;
  for (std::uint32_t i = 0; i < data.size(); ++i) {
    (test_rows.count(i) ? split.test : split.train).push_back(i);
  }
  return split;
}

}  // namespace

TEST_CASE("relevant set is the user's distinct test items") {
  const auto data = l1i_fixture();
  const auto split = split_leave_one_last_item(data);
  const auto relevant = relevant_set(split, data, 0);
  CHECK(relevant == std::unordered_set<ItemId>{*data.items.find("c")});
}

TEST_CASE("basket holdout makes every basket item relevant") {
  DatasetBuilder builder;
  builder.add("u1", "a", "B1", 1, 1);
  builder.add("u1", "b", "B1", 1, 1);
  builder.add("u1", "c", "B2", 2, 1);
  builder.add("u1", "d", "B3", 3, 1);
  builder.add("u1", "e", "B3", 3, 1);
  const auto data = builder.build();
  const auto split = split_leave_one_last_basket(data);
  const auto relevant = relevant_set(split, data, 0);
  CHECK(relevant == std::unordered_set<ItemId>{*data.items.find("d"),
                                               *data.items.find("e")});
}

TEST_CASE("several test baskets union their items") {
  DatasetBuilder builder;
  builder.add("u1", "a", "B1", 1, 1);
  builder.add("u1", "a", "B2", 2, 1);
  builder.add("u1", "b", "B2", 2, 1);
  builder.add("u1", "c", "B3", 3, 1);
  const auto data = builder.build();
  const auto split = manual_split(data, {0, 1, 2, 3});
  for (auto granularity :
       {RelevanceGranularity::kItem, RelevanceGranularity::kBasketUnion}) {
    const auto relevant = relevant_set(split, data, 0, granularity);
    CHECK(relevant.size() == 3);
  }
}

TEST_CASE("candidates are ordered by score with index tie break") {
  DatasetBuilder builder;
  builder.add("u1", "a", "b1", 1, 1);
  builder.add("u2", "b", "b2", 1, 1);
  builder.add("u2", "c", "b3", 2, 1);
  builder.add("u1", "a", "b4", 4, 1);
  const auto data = builder.build();
  const ItemId a = *data.items.find("a");
  const ItemId b = *data.items.find("b");
  const ItemId c = *data.items.find("c");

  // u1 trains on "a" alone and is tested on row 3.
  const auto split = manual_split(data, {3});
  ScriptedModel model(data.user_count(), data.item_count(),
                      [&](UserId, ItemId item) {
                        if (item == a) return 2.0;
                        if (item == b) return 1.0;
                        return 3.0;
                      });

  EvalConfig config;
  config.exclude_train_items = false;
  CHECK(rank_for_user(model, 0, data, split, config) ==
        std::vector<ItemId>{c, a, b});

  config.exclude_train_items = true;
  CHECK(rank_for_user(model, 0, data, split, config) ==
        std::vector<ItemId>{c, b});

  ScriptedModel flat(data.user_count(), data.item_count(),
                     [](UserId, ItemId) { return 1.0; });
  config.exclude_train_items = false;
  CHECK(rank_for_user(flat, 0, data, split, config) ==
        std::vector<ItemId>{a, b, c});
}

TEST_CASE("sampled candidates are seed deterministic") {
  DatasetBuilder builder;
  builder.add("u0", "x1", "p1", 1, 1);
  builder.add("u0", "x2", "p2", 2, 1);
  builder.add("u0", "x3", "p3", 3, 1);
  for (int i = 0; i < 40; ++i) {
    builder.add("anchor", "n" + std::to_string(i), "a" + std::to_string(i),
                10 + i, 1);
  }
  const auto data = builder.build();
  const auto split = split_leave_one_last_item(data);
  ScriptedModel model(data.user_count(), data.item_count(),
                      [](UserId u, ItemId i) {
                        return Rng(u * 7919 + i).uniform01();
                      });
  EvalConfig config;
  config.candidate_mode = CandidateMode::kSampled;
  config.sampled_negatives = 5;
  config.seed = 31;

  const auto once = rank_for_user(model, 0, data, split, config);
  const auto again = rank_for_user(model, 0, data, split, config);
  CHECK(once == again);
  CHECK(once.size() == 6);  // the relevant item plus five negatives

  config.seed = 32;
  const auto other = rank_for_user(model, 0, data, split, config);
  CHECK(once != other);
}

TEST_CASE("an oracle scorer gets perfect means") {
  const auto data = oracle::random_fixture(77);
  // Intersection keeps every relevant item inside the train universe,
  // and exclusion stays off so repeat purchases remain reachable.
  const auto split = split_leave_one_last_item(data, true);
  std::vector<std::set<ItemId>> relevant(data.user_count());
  for (auto idx : split.test) {
    relevant[data.interactions[idx].user].insert(data.interactions[idx].item);
  }
  ScriptedModel model(data.user_count(), data.item_count(),
                      [&](UserId u, ItemId i) {
                        return relevant[u].count(i) ? 1e6 : -double(i);
                      });
  EvalConfig config;
  config.exclude_train_items = false;
  const auto report = evaluate(model, data, split, config, "oracle");
  CHECK(report.mean_ndcg == 1.0);
  CHECK(report.mean_recall == 1.0);
  CHECK(report.evaluated_users == report.per_user.size());
  CHECK(report.evaluated_users > 0);
}

TEST_CASE("a random scorer recalls at the chance rate") {
  // 50 candidate items, K = 10: chance recall for the single relevant
  // item is 0.2. The mean over 1000 users stays within 3 sigma.
  DatasetBuilder builder;
  for (int u = 0; u < 1000; ++u) {
    const std::string user = "u" + std::to_string(u);
    for (int j = 0; j < 3; ++j) {
      builder.add(user, "i" + std::to_string((u * 13 + j * 17) % 50),
                  "b" + std::to_string(u * 3 + j), j, 1);
    }
  }
  // Make sure every item occurs in train at least once.
  for (int i = 0; i < 50; ++i) {
    builder.add("anchor", "i" + std::to_string(i), "anchor" + std::to_string(i),
                0, 1);
  }
  const auto data = builder.build();
  const auto split = split_leave_one_last_item(data);
  ScriptedModel model(data.user_count(), data.item_count(),
                      [](UserId u, ItemId i) {
                        return Rng(u * 104729 + i).uniform01();
                      });
  EvalConfig config;
  config.exclude_train_items = false;
  const auto report = evaluate(model, data, split, config, "random");
  const double p = 10.0 / 50.0;
  const double sigma = std::sqrt(p * (1 - p) / double(report.evaluated_users));
  CHECK(report.evaluated_users >= 999);
  CHECK(std::abs(report.mean_recall - p) <= 3.0 * sigma);
}

TEST_CASE("evaluate matches a by-hand reimplementation") {
  const auto data = oracle::random_fixture(2020, 18, 22);
  const auto split = split_leave_one_last_item(data);
  ScriptedModel model(data.user_count(), data.item_count(),
                      [](UserId u, ItemId i) {
                        return Rng(u * 31 + i * 7).uniform01();
                      });
  EvalConfig config;
  config.k = 5;
  const auto report = evaluate(model, data, split, config, "scripted");

  // Recompute from first principles.
  std::vector<std::set<ItemId>> train_items(data.user_count());
  std::set<ItemId> universe;
  for (auto idx : split.train) {
    train_items[data.interactions[idx].user].insert(
        data.interactions[idx].item);
    universe.insert(data.interactions[idx].item);
  }
  std::vector<std::unordered_set<ItemId>> relevant(data.user_count());
  for (auto idx : split.test) {
    relevant[data.interactions[idx].user].insert(data.interactions[idx].item);
  }

  double sum_ndcg = 0.0, sum_recall = 0.0;
  std::uint64_t evaluated = 0;
  for (UserId u = 0; u < data.user_count(); ++u) {
    if (relevant[u].empty() || train_items[u].empty()) continue;
    std::vector<ItemId> candidates;
    for (ItemId i : universe) {
      if (!train_items[u].count(i)) candidates.push_back(i);
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [&](ItemId x, ItemId y) {
                       const double sx = Rng(u * 31 + x * 7).uniform01();
                       const double sy = Rng(u * 31 + y * 7).uniform01();
                       if (sx != sy) return sx > sy;
                       return x < y;
                     });
    sum_ndcg += oracle::ndcg_at_k(candidates, relevant[u], config.k);
    sum_recall += oracle::recall_at_k(candidates, relevant[u], config.k);
    ++evaluated;
  }
  REQUIRE(evaluated == report.evaluated_users);
  CHECK(report.mean_ndcg ==
        doctest::Approx(sum_ndcg / double(evaluated)).epsilon(1e-12));
  CHECK(report.mean_recall ==
        doctest::Approx(sum_recall / double(evaluated)).epsilon(1e-12));
}

TEST_CASE("users without history are skipped and counted") {
  DatasetBuilder builder;
  builder.add("full", "a", "b1", 1, 1);
  builder.add("full", "b", "b2", 2, 1);
  builder.add("full", "c", "b3", 3, 1);
  builder.add("loner", "a", "b4", 9, 1);
  const auto data = builder.build();
  // loner's single row goes straight to test; it never trains.
  const auto split = manual_split(data, {2, 3});

  auto model = make_recommender(ModelKind::kBprMf);
  Hyperparameters hp;
  hp.embedding_dim = 2;
  hp.epochs = 2;
  model->fit(data, split.train, {}, hp, 1);
  EvalConfig config;
  const auto report = evaluate(*model, data, split, config, "mfbpr");
  CHECK(report.skipped_no_history == 1);
  CHECK(report.evaluated_users == 1);
}

TEST_CASE("user split cohorts evaluate through fold in when the model allows") {
  DatasetBuilder builder;
  for (int u = 0; u < 10; ++u) {
    for (int i = 0; i < 6; ++i) {
      builder.add("u" + std::to_string(u), "i" + std::to_string(i),
                  "b" + std::to_string(u * 6 + i), i + 1, 1);
    }
  }
  const auto data = builder.build();
  const auto split = split_user(data, 0.2, 0.5, 5);
  REQUIRE(split.manifest.fold_in_validation);

  auto knn = make_recommender(ModelKind::kItemKnn);
  knn->fit(data, split.train, {}, Hyperparameters{}, 0);
  EvalConfig config;
  const auto report = evaluate(*knn, data, split, config, "itemknn");
  CHECK(report.evaluated_users == 2);
  CHECK(report.skipped_no_history == 0);

  // Factor models have no fold-in path, so no cohort user is scorable.
  auto bpr = make_recommender(ModelKind::kBprMf);
  Hyperparameters hp;
  hp.embedding_dim = 2;
  hp.epochs = 2;
  bpr->fit(data, split.train, {}, hp, 1);
  CHECK_THROWS_AS(evaluate(*bpr, data, split, config, "mfbpr"), DataError);
}

TEST_CASE("config errors are rejected up front") {
  const auto data = l1i_fixture();
  const auto split = split_leave_one_last_item(data);
  ScriptedModel model(data.user_count(), data.item_count(),
                      [](UserId, ItemId) { return 0.0; });
  EvalConfig config;
  config.k = 0;
  CHECK_THROWS_AS(evaluate(model, data, split, config, "m"), ConfigError);
  config.k = 10;
  config.candidate_mode = CandidateMode::kSampled;
  config.sampled_negatives = 0;
  CHECK_THROWS_AS(evaluate(model, data, split, config, "m"), ConfigError);
}

TEST_CASE("reports round trip through json") {
  const auto data = oracle::random_fixture(303);
  const auto split = split_leave_one_last_item(data);
  auto model = make_recommender(ModelKind::kPopularity);
  model->fit(data, split.train, {}, Hyperparameters{}, 0);
  EvalConfig config;
  config.k = 7;
  config.truncated_recall = true;
  const auto report = evaluate(*model, data, split, config, "pop");

  const auto dir = oracle::temp_dir("eval-roundtrip");
  write_report_json(report, dir / "report.json");
  write_report_csv(report, dir / "report.csv");
  const auto loaded = load_report_json(dir / "report.json");

  CHECK(loaded.model_id == report.model_id);
  CHECK(loaded.model_digest == report.model_digest);
  CHECK(loaded.strategy == report.strategy);
  CHECK(loaded.dataset_digest == report.dataset_digest);
  CHECK(loaded.config == report.config);
  CHECK(loaded.per_user == report.per_user);
  CHECK(loaded.mean_ndcg == report.mean_ndcg);
  CHECK(loaded.mean_recall == report.mean_recall);
  CHECK(loaded.evaluated_users == report.evaluated_users);
  CHECK(loaded.skipped_no_history == report.skipped_no_history);

  std::ifstream csv(dir / "report.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "user,ndcg,recall,relevant");

  CHECK_THROWS_AS(load_report_json(dir / "missing.json"), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("mode and granularity names parse") {
  CHECK(parse_candidate_mode("full") == CandidateMode::kFull);
  CHECK(parse_candidate_mode("sampled") == CandidateMode::kSampled);
  CHECK(candidate_mode_name(CandidateMode::kSampled) == "sampled");
  CHECK_THROWS_AS(parse_candidate_mode("lazy"), ConfigError);
  CHECK(parse_granularity("item") == RelevanceGranularity::kItem);
  CHECK(parse_granularity("basket-union") == RelevanceGranularity::kBasketUnion);
  CHECK(granularity_name(RelevanceGranularity::kBasketUnion) == "basket-union");
  CHECK_THROWS_AS(parse_granularity("row"), ConfigError);
}

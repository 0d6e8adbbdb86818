#include <benchmark/benchmark.h>

#include <numeric>
#include <vector>

#include "splitkit/models.hpp"
#include "splitkit/synth.hpp"

using namespace splitkit;

namespace {

Dataset bench_dataset(std::uint32_t n_users) {
  SynthConfig config;
  config.n_users = n_users;
  config.n_items = 300;
  config.min_baskets_per_user = 5;
  config.max_baskets_per_user = 12;
  config.min_items_per_basket = 1;
  config.max_items_per_basket = 5;
  config.horizon = 10000;
  config.user_activity_spread = 0.4;
  config.seed = 7;
  config.windows = {{0, 10000, std::vector<double>(300, 1.0)}};
  return generate(config);
}

std::vector<std::uint32_t> all_rows(const Dataset& data) {
  std::vector<std::uint32_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

void fit_one(benchmark::State& state, ModelKind kind, Hyperparameters hp) {
  const auto data = bench_dataset(static_cast<std::uint32_t>(state.range(0)));
  const auto rows = all_rows(data);
  for (auto _ : state) {
    auto model = make_recommender(kind);
    model->fit(data, rows, {}, hp, 11);
    benchmark::DoNotOptimize(model);
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(data.size()));
}

}  // namespace

static void PopularityFit(benchmark::State& state) {
  fit_one(state, ModelKind::kPopularity, {});
}
BENCHMARK(PopularityFit)->Arg(1000)->Arg(5000);

static void ItemKnnFit(benchmark::State& state) {
  fit_one(state, ModelKind::kItemKnn, {});
}
BENCHMARK(ItemKnnFit)->Arg(1000)->Arg(5000);

static void BprFit(benchmark::State& state) {
  Hyperparameters hp;
  hp.embedding_dim = 32;
  hp.epochs = 10;
  fit_one(state, ModelKind::kBprMf, hp);
}
BENCHMARK(BprFit)->Arg(1000)->Arg(5000);

static void ScoreAll(benchmark::State& state) {
  const auto data = bench_dataset(1000);
  auto model = make_recommender(ModelKind::kItemKnn);
  model->fit(data, all_rows(data), {}, {}, 11);
  UserId user = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(model->score_all(user));
    user = (user + 1) % data.user_count();
  }
}
BENCHMARK(ScoreAll);

BENCHMARK_MAIN();

#include <benchmark/benchmark.h>

#include <unordered_set>
#include <vector>

#include "splitkit/compare.hpp"
#include "splitkit/metrics.hpp"
#include "splitkit/rng.hpp"

using namespace splitkit;

namespace {

std::vector<ItemId> ranked_list(std::size_t n, Rng& rng) {
  std::vector<ItemId> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<ItemId>(i);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::swap(out[i], out[rng.below(i + 1)]);
  }
  return out;
}

}  // namespace

static void NdcgAtTen(benchmark::State& state) {
  Rng rng(1);
  const auto ranked = ranked_list(static_cast<std::size_t>(state.range(0)), rng);
  std::unordered_set<ItemId> relevant;
  for (int i = 0; i < 20; ++i) {
    relevant.insert(static_cast<ItemId>(rng.below(ranked.size())));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(ndcg_at_k(ranked, relevant, 10));
  }
}
BENCHMARK(NdcgAtTen)->Range(100, 100000);

static void RecallAtTen(benchmark::State& state) {
  Rng rng(2);
  const auto ranked = ranked_list(static_cast<std::size_t>(state.range(0)), rng);
  std::unordered_set<ItemId> relevant;
  for (int i = 0; i < 20; ++i) {
    relevant.insert(static_cast<ItemId>(rng.below(ranked.size())));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(recall_at_k(ranked, relevant, 10));
  }
}
BENCHMARK(RecallAtTen)->Range(100, 100000);

static void KendallTau(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = rng.uniform01();
    y[i] = rng.uniform01();
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(kendall_tau(x, y));
  }
  state.SetComplexityN(static_cast<std::int64_t>(n));
}
BENCHMARK(KendallTau)->RangeMultiplier(4)->Range(64, 262144)->Complexity();

static void KendallTauTied(benchmark::State& state) {
  // Heavy ties exercise the tie-counting path.
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Rng rng(4);
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = static_cast<double>(rng.below(8));
    y[i] = static_cast<double>(rng.below(8));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(kendall_tau(x, y));
  }
}
BENCHMARK(KendallTauTied)->RangeMultiplier(4)->Range(64, 262144);

BENCHMARK_MAIN();

#include "splitkit/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "splitkit/errors.hpp"

namespace splitkit {

namespace {

void check_args(const std::unordered_set<ItemId>& relevant, std::size_t k) {
  if (k == 0) throw ConfigError("metric cutoff K must be at least 1");
  if (relevant.empty()) {
    throw DataError("metric undefined for an empty relevant set");
  }
}

}  // namespace

double ndcg_at_k(const std::vector<ItemId>& ranked,
                 const std::unordered_set<ItemId>& relevant, std::size_t k) {
  check_args(relevant, k);
  const std::size_t depth = std::min(k, ranked.size());
  double dcg = 0.0;
  for (std::size_t p = 0; p < depth; ++p) {
    if (relevant.count(ranked[p])) {
      dcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
    }
  }
  const std::size_t ideal = std::min(relevant.size(), k);
  double idcg = 0.0;
  for (std::size_t p = 0; p < ideal; ++p) {
    idcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
  }
  return dcg / idcg;
}

double recall_at_k(const std::vector<ItemId>& ranked,
                   const std::unordered_set<ItemId>& relevant, std::size_t k,
                   bool truncate_denominator) {
  check_args(relevant, k);
  const std::size_t depth = std::min(k, ranked.size());
  std::size_t hits = 0;
  for (std::size_t p = 0; p < depth; ++p) {
    if (relevant.count(ranked[p])) ++hits;
  }
  const std::size_t denom =
      truncate_denominator ? std::min(relevant.size(), k) : relevant.size();
  return static_cast<double>(hits) / static_cast<double>(denom);
}

}  // namespace splitkit

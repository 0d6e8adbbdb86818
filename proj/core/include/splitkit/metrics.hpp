#pragma once

#include <cstddef>
#include <unordered_set>
#include <vector>

#include "splitkit/dataset.hpp"

namespace splitkit {

// Binary-relevance NDCG@K: DCG over the top K ranked items divided by
// the ideal DCG of min(|relevant|, K) hits. Throws DataError on an
// empty relevant set and ConfigError on k = 0.
double ndcg_at_k(const std::vector<ItemId>& ranked,
                 const std::unordered_set<ItemId>& relevant, std::size_t k);

// |top-K hits| / |relevant|. With truncate_denominator the divisor
// becomes min(|relevant|, K) instead.
double recall_at_k(const std::vector<ItemId>& ranked,
                   const std::unordered_set<ItemId>& relevant, std::size_t k,
                   bool truncate_denominator = false);

}  // namespace splitkit

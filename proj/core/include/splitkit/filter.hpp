#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "splitkit/dataset.hpp"
#include "splitkit/strategy.hpp"

namespace splitkit {

enum class FilterOrder {
  kItemsFirst,  // item pass, then user pass
  kUsersFirst,  // user pass, then item pass
};

FilterOrder parse_filter_order(std::string_view text);
std::string filter_order_name(FilterOrder order);

// Frequency thresholds. A threshold of zero disables that check. Counts
// are interaction rows (one purchase event each), not quantity sums;
// min_user_baskets counts a user's distinct baskets.
struct FilterSpec {
  std::uint32_t min_item_purchases = 0;  // drop items bought < this many times
  std::uint32_t min_user_items = 0;      // drop users with < this many purchases
  std::uint32_t min_user_baskets = 0;    // drop users with < this many baskets
  FilterOrder order = FilterOrder::kItemsFirst;
  bool iterate_to_fixpoint = false;

  bool operator==(const FilterSpec&) const = default;
};

// Removes items/users below the thresholds, one pass per side in
// spec.order (repeated until stable when iterate_to_fixpoint is set).
// Returns a fresh dataset with compacted id maps; throws DataError if
// nothing survives. All-zero thresholds return an identical copy.
Dataset apply_filter(const Dataset& dataset, const FilterSpec& spec);

// The preprocessing each strategy's published results used.
// temporal-global gets the stricter user-then-item thresholds; every
// other strategy defaults to the leave-one-last item filter.
FilterSpec builtin_spec(StrategyTag strategy);

}  // namespace splitkit

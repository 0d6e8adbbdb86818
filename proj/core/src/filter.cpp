#include "splitkit/filter.hpp"

#include <unordered_set>
#include <vector>

#include "splitkit/errors.hpp"

namespace splitkit {

FilterOrder parse_filter_order(std::string_view text) {
  if (text == "items-first") return FilterOrder::kItemsFirst;
  if (text == "users-first") return FilterOrder::kUsersFirst;
  throw ConfigError("unknown filter order '" + std::string(text) +
                    "' (expected items-first or users-first)");
}

std::string filter_order_name(FilterOrder order) {
  return order == FilterOrder::kItemsFirst ? "items-first" : "users-first";
}

namespace {

// Both passes mark rows dead in place and report whether anything changed.

bool item_pass(const Dataset& dataset, std::vector<char>& alive,
               std::uint32_t min_purchases) {
  if (min_purchases == 0) return false;
  std::vector<std::uint32_t> counts(dataset.item_count(), 0);
  for (std::size_t i = 0; i < dataset.interactions.size(); ++i) {
    if (alive[i]) ++counts[dataset.interactions[i].item];
  }
  bool changed = false;
  for (std::size_t i = 0; i < dataset.interactions.size(); ++i) {
    if (alive[i] && counts[dataset.interactions[i].item] < min_purchases) {
      alive[i] = 0;
      changed = true;
    }
  }
  return changed;
}

bool user_pass(const Dataset& dataset, std::vector<char>& alive,
               std::uint32_t min_items, std::uint32_t min_baskets) {
  if (min_items == 0 && min_baskets == 0) return false;
  std::vector<std::uint32_t> rows(dataset.user_count(), 0);
  std::vector<std::uint32_t> baskets(dataset.user_count(), 0);
  std::unordered_set<std::uint64_t> seen;
  for (std::size_t i = 0; i < dataset.interactions.size(); ++i) {
    if (!alive[i]) continue;
    const Interaction& x = dataset.interactions[i];
    ++rows[x.user];
    const std::uint64_t key =
        (static_cast<std::uint64_t>(x.user) << 32) | x.basket;
    if (seen.insert(key).second) ++baskets[x.user];
  }
  bool changed = false;
  for (std::size_t i = 0; i < dataset.interactions.size(); ++i) {
    if (!alive[i]) continue;
    const UserId u = dataset.interactions[i].user;
    const bool drop = (min_items > 0 && rows[u] < min_items) ||
                      (min_baskets > 0 && baskets[u] < min_baskets);
    if (drop) {
      alive[i] = 0;
      changed = true;
    }
  }
  return changed;
}

}  // namespace

Dataset apply_filter(const Dataset& dataset, const FilterSpec& spec) {
  std::vector<char> alive(dataset.interactions.size(), 1);

  for (;;) {
    bool changed = false;
    if (spec.order == FilterOrder::kItemsFirst) {
      changed |= item_pass(dataset, alive, spec.min_item_purchases);
      changed |= user_pass(dataset, alive, spec.min_user_items,
                           spec.min_user_baskets);
    } else {
      changed |= user_pass(dataset, alive, spec.min_user_items,
                           spec.min_user_baskets);
      changed |= item_pass(dataset, alive, spec.min_item_purchases);
    }
    if (!spec.iterate_to_fixpoint || !changed) break;
  }

  bool any_dropped = false;
  for (char a : alive) {
    if (!a) {
      any_dropped = true;
      break;
    }
  }
  if (!any_dropped) return dataset;

  DatasetBuilder builder;
  for (std::size_t i = 0; i < dataset.interactions.size(); ++i) {
    if (alive[i]) builder.add(dataset, dataset.interactions[i]);
  }
  if (builder.row_count() == 0) {
    throw DataError("filter removed every interaction");
  }
  return builder.build(BasketPolicy::kReject);
}

FilterSpec builtin_spec(StrategyTag strategy) {
  FilterSpec spec;
  if (strategy == StrategyTag::kTemporalGlobal) {
    spec.min_user_items = 30;
    spec.min_user_baskets = 10;
    spec.min_item_purchases = 20;
    spec.order = FilterOrder::kUsersFirst;
  } else {
    spec.min_item_purchases = 10;
    spec.order = FilterOrder::kItemsFirst;
  }
  return spec;
}

}  // namespace splitkit

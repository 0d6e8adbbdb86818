#include "splitkit/dataset.hpp"

#include <algorithm>
#include <unordered_map>

#include "splitkit/digest.hpp"

namespace splitkit {

std::uint32_t IdMap::intern(std::string_view external) {
  auto it = dense_.find(external);
  if (it != dense_.end()) return it->second;
  const auto dense = static_cast<std::uint32_t>(external_.size());
  external_.emplace_back(external);
  dense_.emplace(external_.back(), dense);
  return dense;
}

std::optional<std::uint32_t> IdMap::find(std::string_view external) const {
  auto it = dense_.find(external);
  if (it == dense_.end()) return std::nullopt;
  return it->second;
}

const std::string& IdMap::external(std::uint32_t dense) const {
  if (dense >= external_.size()) {
    throw DataError("dense index " + std::to_string(dense) +
                    " out of range (map holds " +
                    std::to_string(external_.size()) + " entries)");
  }
  return external_[dense];
}

std::span<const std::uint32_t> Dataset::chronology(UserId user) const {
  if (user >= chronology_by_user.size()) {
    throw DataError("unknown user index " + std::to_string(user));
  }
  return chronology_by_user[user];
}

std::string Dataset::content_digest() const {
  Digest d;
  auto mix_map = [&d](const IdMap& m) {
    for (std::uint32_t i = 0; i < m.size(); ++i) {
      d.update(m.external(i));
      d.update("\x1f");
    }
    d.update("\x1e");
  };
  mix_map(users);
  mix_map(items);
  mix_map(baskets);
  for (const Interaction& x : interactions) {
    d.update_value(x.user);
    d.update_value(x.item);
    d.update_value(x.basket);
    d.update_value(x.timestamp);
    d.update_value(x.quantity);
  }
  return d.hex();
}

std::string Dataset::timestamp_granularity() const {
  if (interactions.empty()) return "seconds";
  for (const Interaction& x : interactions) {
    if (x.timestamp % 86400 != 0) return "seconds";
  }
  return "days";
}

void DatasetBuilder::preset_maps(IdMap users, IdMap items, IdMap baskets) {
  if (!rows_.empty()) {
    throw DataError("preset_maps must precede any added rows");
  }
  dataset_.users = std::move(users);
  dataset_.items = std::move(items);
  dataset_.baskets = std::move(baskets);
}

void DatasetBuilder::add(std::string_view user, std::string_view item,
                         std::string_view basket, Timestamp timestamp,
                         std::uint32_t quantity, std::uint64_t source_line) {
  if (timestamp < 0) {
    throw DataError("line " + std::to_string(source_line) +
                    ": negative timestamp " + std::to_string(timestamp));
  }
  rows_.push_back(Row{dataset_.users.intern(user), dataset_.items.intern(item),
                      dataset_.baskets.intern(basket), timestamp, quantity,
                      source_line});
}

void DatasetBuilder::add(const Dataset& source, const Interaction& x) {
  add(source.users.external(x.user), source.items.external(x.item),
      source.baskets.external(x.basket), x.timestamp, x.quantity);
}

namespace {

struct PairHash {
  std::size_t operator()(const std::pair<std::uint64_t, std::uint64_t>& p) const {
    return std::hash<std::uint64_t>()(p.first * 0x9e3779b97f4a7c15ULL ^ p.second);
  }
};

}  // namespace

Dataset DatasetBuilder::build(BasketPolicy policy) {
  // Basket consistency: one user and one timestamp per basket. Checked before
  // dedup so that merged rows are already known to agree on timestamp.
  {
    const std::uint32_t n_baskets = dataset_.baskets.size();
    struct First {
      UserId user;
      Timestamp timestamp;
      bool seen = false;
      bool violated = false;
    };
    std::vector<First> first(n_baskets);
    for (const Row& r : rows_) {
      First& f = first[r.basket];
      if (!f.seen) {
        f = First{r.user, r.timestamp, true, false};
      } else if (f.user != r.user || f.timestamp != r.timestamp) {
        if (policy == BasketPolicy::kReject) {
          const std::string& ext = dataset_.baskets.external(r.basket);
          if (f.user != r.user) {
            throw DataError("line " + std::to_string(r.line) + ": basket '" +
                            ext + "' spans users '" +
                            dataset_.users.external(f.user) + "' and '" +
                            dataset_.users.external(r.user) + "'");
          }
          throw DataError("line " + std::to_string(r.line) + ": basket '" +
                          ext + "' spans timestamps " +
                          std::to_string(f.timestamp) + " and " +
                          std::to_string(r.timestamp));
        }
        f.violated = true;
      }
    }
    if (policy == BasketPolicy::kSplit) {
      // Re-intern violating baskets as one sub-basket per (user, timestamp).
      for (Row& r : rows_) {
        if (!first[r.basket].violated) continue;
        const std::string ext = dataset_.baskets.external(r.basket) + "~" +
                                dataset_.users.external(r.user) + "~" +
                                std::to_string(r.timestamp);
        r.basket = dataset_.baskets.intern(ext);
      }
    }
  }

  // Merge duplicate (user, item, basket) rows by summing quantities; the
  // first occurrence keeps its input position.
  {
    std::unordered_map<std::pair<std::uint64_t, std::uint64_t>, std::size_t,
                       PairHash>
        seen;
    seen.reserve(rows_.size());
    std::vector<Row> merged;
    merged.reserve(rows_.size());
    for (const Row& r : rows_) {
      const std::pair<std::uint64_t, std::uint64_t> key{
          (static_cast<std::uint64_t>(r.user) << 32) | r.item, r.basket};
      auto [it, inserted] = seen.emplace(key, merged.size());
      if (inserted) {
        merged.push_back(r);
      } else {
        merged[it->second].quantity += r.quantity;
      }
    }
    rows_ = std::move(merged);
  }

  // Zero-quantity events are no-ops after merging.
  std::erase_if(rows_, [](const Row& r) { return r.quantity == 0; });

  // Canonical order. stable_sort preserves input order within
  // (timestamp, basket) ties.
  std::stable_sort(rows_.begin(), rows_.end(), [](const Row& a, const Row& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return a.basket < b.basket;
  });

  dataset_.interactions.reserve(rows_.size());
  for (const Row& r : rows_) {
    dataset_.interactions.push_back(
        Interaction{r.user, r.item, r.basket, r.timestamp,
                    static_cast<std::uint32_t>(
                        std::min<std::uint64_t>(r.quantity, UINT32_MAX))});
  }
  rows_.clear();

  dataset_.chronology_by_user.assign(dataset_.users.size(), {});
  for (std::uint32_t i = 0; i < dataset_.interactions.size(); ++i) {
    dataset_.chronology_by_user[dataset_.interactions[i].user].push_back(i);
  }

  return std::move(dataset_);
}

}  // namespace splitkit

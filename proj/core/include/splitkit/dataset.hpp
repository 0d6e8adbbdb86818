#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "splitkit/errors.hpp"

namespace splitkit {

using UserId = std::uint32_t;
using ItemId = std::uint32_t;
using BasketId = std::uint32_t;
using Timestamp = std::int64_t;  // epoch seconds

// One user-item event. Baskets group events that were transacted together;
// logs without basket information get one synthetic basket per row so that
// item-level and basket-level splitters share a single code path.
struct Interaction {
  UserId user = 0;
  ItemId item = 0;
  BasketId basket = 0;
  Timestamp timestamp = 0;
  std::uint32_t quantity = 1;

  friend bool operator==(const Interaction&, const Interaction&) = default;
};

// Bidirectional external-id <-> dense-index table. Dense indices are assigned
// in first-seen order and are stable for a given input.
class IdMap {
 public:
  std::uint32_t intern(std::string_view external);
  std::optional<std::uint32_t> find(std::string_view external) const;
  const std::string& external(std::uint32_t dense) const;
  std::uint32_t size() const { return static_cast<std::uint32_t>(external_.size()); }
  bool empty() const { return external_.empty(); }

  friend bool operator==(const IdMap& a, const IdMap& b) {
    return a.external_ == b.external_;
  }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const {
      return std::hash<std::string_view>()(s);
    }
  };

  std::vector<std::string> external_;
  std::unordered_map<std::string, std::uint32_t, Hash, std::equal_to<>> dense_;
};

// Canonical, immutable view of a transaction log: deduplicated, ID-mapped and
// time-indexed. `interactions` is sorted by (timestamp, basket index, input
// order); a finished Dataset is safe to share across concurrent readers.
struct Dataset {
  std::vector<Interaction> interactions;
  IdMap users;
  IdMap items;
  IdMap baskets;
  // Per user, indices into `interactions` in chronological order
  // (timestamp, basket index, input order). A permutation partition of
  // the interaction index range.
  std::vector<std::vector<std::uint32_t>> chronology_by_user;

  std::uint32_t user_count() const { return users.size(); }
  std::uint32_t item_count() const { return items.size(); }
  std::uint32_t basket_count() const { return baskets.size(); }
  std::size_t size() const { return interactions.size(); }

  // Chronology of one user; throws DataError for an unknown user.
  std::span<const std::uint32_t> chronology(UserId user) const;

  // Digest over the canonical serialization (rows + id maps); identifies the
  // dataset for split caching and manifest validation.
  std::string content_digest() const;

  // "days" when every timestamp is a whole multiple of 86400, else "seconds".
  // Recorded in split manifests since source logs differ in granularity.
  std::string timestamp_granularity() const;

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.interactions == b.interactions && a.users == b.users &&
           a.items == b.items && a.baskets == b.baskets;
  }
};

// What to do with a basket whose rows disagree on user or timestamp.
//  kReject: fail ingestion (default; silent repair would move split
//           boundaries invisibly).
//  kSplit:  split the basket into one sub-basket per distinct
//           (user, timestamp) pair.
enum class BasketPolicy { kReject, kSplit };

// Single-writer accumulator that canonicalizes rows into a Dataset:
// assigns dense ids first-seen, merges duplicate (user, item, basket) rows by
// summing quantity, validates basket consistency, sorts, and builds the
// per-user chronologies.
class DatasetBuilder {
 public:
  // Seeds the id maps before any add(); load_dataset uses this to reproduce
  // the original dense assignment from the sidecar tables.
  void preset_maps(IdMap users, IdMap items, IdMap baskets);

  // `source_line` is carried into error messages; pass 0 when not applicable.
  void add(std::string_view user, std::string_view item,
           std::string_view basket, Timestamp timestamp,
           std::uint32_t quantity, std::uint64_t source_line = 0);

  // Convenience for re-building from an existing dataset's rows.
  void add(const Dataset& source, const Interaction& interaction);

  std::size_t row_count() const { return rows_.size(); }

  // Consumes the builder.
  Dataset build(BasketPolicy policy = BasketPolicy::kReject);

 private:
  struct Row {
    UserId user;
    ItemId item;
    BasketId basket;
    Timestamp timestamp;
    std::uint64_t quantity;
    std::uint64_t line;
  };

  Dataset dataset_;
  std::vector<Row> rows_;
};

}  // namespace splitkit

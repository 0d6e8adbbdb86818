#pragma once

#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "splitkit/dataset.hpp"

namespace splitkit {

enum class TimestampFormat {
  kAuto,          // integer => epoch seconds, otherwise ISO date
  kEpochSeconds,  // signed decimal integer
  kIsoDate,       // YYYY-MM-DD[ HH:MM:SS], interpreted as UTC
};

// Column selectors are header names when `has_header` is true, otherwise
// 0-based positions given as decimal strings. user, item and timestamp are
// mandatory; an empty basket list makes every row its own basket; an empty
// quantity selector defaults every row's quantity to 1.
struct SchemaConfig {
  std::string user_column;
  std::string item_column;
  std::string timestamp_column;
  std::vector<std::string> basket_columns;  // >1 selectors form a composite key
  std::string quantity_column;
  char delimiter = ',';
  bool has_header = true;
  TimestampFormat timestamp_format = TimestampFormat::kAuto;
  BasketPolicy basket_policy = BasketPolicy::kReject;
};

// Parses a delimited transaction log into a canonical Dataset. Errors carry
// the 1-based source line number.
Dataset parse_transactions(std::istream& source, const SchemaConfig& schema);
Dataset parse_transactions_file(const std::filesystem::path& path,
                                const SchemaConfig& schema);

// Canonical on-disk form: <dir>/interactions.csv[.gz] plus sidecar id-map
// tables users.map / items.map / baskets.map. Every file carries a
// format-version line. load_dataset(export_dataset(d)) == d, dense ids
// included.
void export_dataset(const Dataset& dataset, const std::filesystem::path& dir,
                    bool gzip = false);
Dataset load_dataset(const std::filesystem::path& dir);

// Epoch seconds for a civil UTC date; used by the ISO timestamp parser.
Timestamp parse_timestamp(std::string_view text, TimestampFormat format);

}  // namespace splitkit

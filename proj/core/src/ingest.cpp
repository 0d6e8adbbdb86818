#include "splitkit/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "splitkit/io_util.hpp"
#include "splitkit/version.hpp"

namespace splitkit {

namespace {

bool is_integer(std::string_view s) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  }
  return true;
}

std::int64_t parse_int(std::string_view s, const char* what) {
  std::int64_t value = 0;
  const auto* begin = s.data();
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) {
    throw DataError(std::string("unparseable ") + what + " '" +
                    std::string(s) + "'");
  }
  return value;
}

// Days since 1970-01-01 for a proleptic Gregorian date (Hinnant's algorithm).
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

Timestamp parse_iso(std::string_view s) {
  // YYYY-MM-DD with optional " HH:MM:SS".
  auto fail = [&s]() -> Timestamp {
    throw DataError("unparseable timestamp '" + std::string(s) + "'");
  };
  if (s.size() != 10 && s.size() != 19) return fail();
  if (s[4] != '-' || s[7] != '-') return fail();
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return fail();
  }
  const int year = (s[0] - '0') * 1000 + (s[1] - '0') * 100 +
                   (s[2] - '0') * 10 + (s[3] - '0');
  const unsigned month = static_cast<unsigned>((s[5] - '0') * 10 + (s[6] - '0'));
  const unsigned day = static_cast<unsigned>((s[8] - '0') * 10 + (s[9] - '0'));
  if (month < 1 || month > 12 || day < 1 || day > 31) return fail();
  std::int64_t seconds = days_from_civil(year, month, day) * 86400;
  if (s.size() == 19) {
    if (s[10] != ' ' || s[13] != ':' || s[16] != ':') return fail();
    for (std::size_t i : {11u, 12u, 14u, 15u, 17u, 18u}) {
      if (!std::isdigit(static_cast<unsigned char>(s[i]))) return fail();
    }
    const int hh = (s[11] - '0') * 10 + (s[12] - '0');
    const int mm = (s[14] - '0') * 10 + (s[15] - '0');
    const int ss = (s[17] - '0') * 10 + (s[18] - '0');
    if (hh > 23 || mm > 59 || ss > 60) return fail();
    seconds += hh * 3600 + mm * 60 + ss;
  }
  return seconds;
}

// Resolves a column selector against the header (or as a 0-based position).
int resolve_column(const std::string& selector,
                   const std::vector<std::string>& header, bool has_header,
                   const char* what) {
  if (has_header) {
    auto it = std::find(header.begin(), header.end(), selector);
    if (it != header.end()) return static_cast<int>(it - header.begin());
    // fall through: allow numeric selectors even with a header present
  }
  if (is_integer(selector)) {
    const std::int64_t pos = parse_int(selector, "column position");
    if (pos >= 0) return static_cast<int>(pos);
  }
  throw ConfigError(std::string(what) + " column '" + selector +
                    (has_header ? "' not found in header" : "' is not a position"));
}

struct ResolvedSchema {
  int user;
  int item;
  int timestamp;
  std::vector<int> baskets;
  int quantity;  // -1 when absent
  int max_column;
};

ResolvedSchema resolve(const SchemaConfig& schema,
                       const std::vector<std::string>& header) {
  if (schema.user_column.empty() || schema.item_column.empty() ||
      schema.timestamp_column.empty()) {
    throw ConfigError("schema requires user, item and timestamp columns");
  }
  ResolvedSchema r{};
  r.user = resolve_column(schema.user_column, header, schema.has_header, "user");
  r.item = resolve_column(schema.item_column, header, schema.has_header, "item");
  r.timestamp = resolve_column(schema.timestamp_column, header,
                               schema.has_header, "timestamp");
  for (const std::string& b : schema.basket_columns) {
    r.baskets.push_back(resolve_column(b, header, schema.has_header, "basket"));
  }
  r.quantity = schema.quantity_column.empty()
                   ? -1
                   : resolve_column(schema.quantity_column, header,
                                    schema.has_header, "quantity");
  r.max_column = std::max({r.user, r.item, r.timestamp, r.quantity});
  for (int b : r.baskets) r.max_column = std::max(r.max_column, b);
  return r;
}

}  // namespace

Timestamp parse_timestamp(std::string_view text, TimestampFormat format) {
  switch (format) {
    case TimestampFormat::kEpochSeconds:
      return parse_int(text, "timestamp");
    case TimestampFormat::kIsoDate:
      return parse_iso(text);
    case TimestampFormat::kAuto:
      return is_integer(text) ? parse_int(text, "timestamp") : parse_iso(text);
  }
  throw ConfigError("unknown timestamp format");
}

Dataset parse_transactions(std::istream& source, const SchemaConfig& schema) {
  std::string line;
  std::uint64_t line_no = 0;

  std::vector<std::string> header;
  if (schema.has_header) {
    if (!std::getline(source, line)) {
      throw DataError("empty input: missing header row");
    }
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    header = split_fields(line, schema.delimiter);
  }
  const ResolvedSchema cols = resolve(schema, header);

  DatasetBuilder builder;
  while (std::getline(source, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    try {
      fields = split_fields(line, schema.delimiter);
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (static_cast<int>(fields.size()) <= cols.max_column) {
      throw DataError("line " + std::to_string(line_no) + ": expected at least " +
                      std::to_string(cols.max_column + 1) + " fields, got " +
                      std::to_string(fields.size()));
    }
    try {
      const Timestamp t =
          parse_timestamp(fields[static_cast<std::size_t>(cols.timestamp)],
                          schema.timestamp_format);
      std::uint32_t quantity = 1;
      if (cols.quantity >= 0) {
        const std::int64_t q = parse_int(
            fields[static_cast<std::size_t>(cols.quantity)], "quantity");
        if (q < 0) throw DataError("negative quantity " + std::to_string(q));
        quantity = static_cast<std::uint32_t>(
            std::min<std::int64_t>(q, UINT32_MAX));
      }
      std::string basket;
      if (cols.baskets.empty()) {
        basket = "_r" + std::to_string(line_no);
      } else {
        for (std::size_t i = 0; i < cols.baskets.size(); ++i) {
          if (i > 0) basket.push_back('|');
          basket += fields[static_cast<std::size_t>(cols.baskets[i])];
        }
      }
      builder.add(fields[static_cast<std::size_t>(cols.user)],
                  fields[static_cast<std::size_t>(cols.item)], basket, t,
                  quantity, line_no);
    } catch (const DataError& e) {
      const std::string what = e.what();
      if (what.rfind("line ", 0) == 0) throw;
      throw DataError("line " + std::to_string(line_no) + ": " + what);
    }
  }
  return builder.build(schema.basket_policy);
}

Dataset parse_transactions_file(const std::filesystem::path& path,
                                const SchemaConfig& schema) {
  std::istringstream in(read_text(path));
  return parse_transactions(in, schema);
}

namespace {

constexpr char kDatasetMagic[] = "#splitkit-dataset v";
constexpr char kIdMapMagic[] = "#splitkit-idmap v";

std::string render_idmap(const IdMap& map) {
  std::string out = kIdMapMagic + std::to_string(kDatasetFormatVersion) + "\n";
  for (std::uint32_t i = 0; i < map.size(); ++i) {
    out += encode_line(map.external(i));
    out.push_back('\n');
  }
  return out;
}

void load_idmap(const std::filesystem::path& path, IdMap& map) {
  const std::string text = read_text(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind(kIdMapMagic, 0) != 0) {
    throw IoError("not a splitkit id map: " + path.string());
  }
  while (std::getline(in, line)) {
    map.intern(decode_line(line));
  }
}

}  // namespace

void export_dataset(const Dataset& dataset, const std::filesystem::path& dir,
                    bool gzip) {
  std::filesystem::create_directories(dir);
  std::string body = kDatasetMagic + std::to_string(kDatasetFormatVersion) + "\n";
  body += "user,item,basket,timestamp,quantity\n";
  for (const Interaction& x : dataset.interactions) {
    body += escape_field(dataset.users.external(x.user), ',');
    body.push_back(',');
    body += escape_field(dataset.items.external(x.item), ',');
    body.push_back(',');
    body += escape_field(dataset.baskets.external(x.basket), ',');
    body.push_back(',');
    body += std::to_string(x.timestamp);
    body.push_back(',');
    body += std::to_string(x.quantity);
    body.push_back('\n');
  }
  if (gzip) {
    write_text_gzip(dir / "interactions.csv.gz", body);
  } else {
    write_text(dir / "interactions.csv", body);
  }
  write_text(dir / "users.map", render_idmap(dataset.users));
  write_text(dir / "items.map", render_idmap(dataset.items));
  write_text(dir / "baskets.map", render_idmap(dataset.baskets));
}

Dataset load_dataset(const std::filesystem::path& dir) {
  const std::filesystem::path plain = dir / "interactions.csv";
  const std::filesystem::path gz = dir / "interactions.csv.gz";
  const std::filesystem::path& file =
      std::filesystem::exists(plain) ? plain : gz;
  std::string text = read_text(file);

  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind(kDatasetMagic, 0) != 0) {
    throw IoError("not a splitkit dataset: " + file.string());
  }
  const std::string version = line.substr(std::strlen(kDatasetMagic));
  if (version != std::to_string(kDatasetFormatVersion)) {
    throw IoError("unsupported dataset format version " + version +
                  " in " + file.string());
  }
  if (!std::getline(in, line)) {
    throw IoError("truncated dataset file: " + file.string());
  }

  // Pre-interning the sidecar maps pins every dense id to its original
  // value, so round trips preserve ids exactly.
  IdMap users, items, baskets;
  load_idmap(dir / "users.map", users);
  load_idmap(dir / "items.map", items);
  load_idmap(dir / "baskets.map", baskets);
  DatasetBuilder builder;
  builder.preset_maps(std::move(users), std::move(items), std::move(baskets));

  std::uint64_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_fields(line, ',');
    if (fields.size() != 5) {
      throw IoError(file.string() + " line " + std::to_string(line_no) +
                    ": expected 5 fields, got " + std::to_string(fields.size()));
    }
    const Timestamp t = parse_int(fields[3], "timestamp");
    const std::int64_t q = parse_int(fields[4], "quantity");
    if (q < 0) {
      throw IoError(file.string() + " line " + std::to_string(line_no) +
                    ": negative quantity");
    }
    builder.add(fields[0], fields[1], fields[2], t,
                static_cast<std::uint32_t>(q), line_no);
  }
  return builder.build(BasketPolicy::kReject);
}

}  // namespace splitkit

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace splitkit {

// Splits one delimited line into fields. Supports RFC 4180 style quoting:
// a field wrapped in double quotes may contain the delimiter, doubled quotes
// and (already-joined) newlines. Throws DataError on an unterminated quote.
std::vector<std::string> split_fields(std::string_view line, char delimiter);

// Quotes `field` if it contains the delimiter, a quote or a newline.
std::string escape_field(std::string_view field, char delimiter);

// Whole-file helpers. read_text transparently inflates gzip files (detected
// by magic bytes, not extension). write_text creates parent directories.
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view content);
void write_text_gzip(const std::filesystem::path& path, std::string_view content);

// One line per entry with backslash escaping for \n, \r and backslash itself,
// so arbitrary external ids survive line-oriented files.
std::string encode_line(std::string_view value);
std::string decode_line(std::string_view value);

}  // namespace splitkit

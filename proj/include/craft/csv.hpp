#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace craft::csv {

struct Row {
  std::vector<std::string> fields;
  std::size_t line = 0;  // 1-based physical line where the row starts
};

/// RFC 4180 reader: quoted fields may hold commas, quotes ("") and newlines.
/// A leading UTF-8 BOM is dropped; CRLF and LF both end a record; blank lines are skipped.
/// Throws ParseError (tagged with `source`) on an unterminated quote or stray quote.
std::vector<Row> parse(std::string_view text, const std::string& source);

std::vector<Row> read_file(const std::string& path);

/// Quotes only when the field needs it.
std::string escape(std::string_view field);

std::string format_row(const std::vector<std::string>& fields);

/// Case-insensitive header lookup; returns npos when absent.
std::size_t find_column(const std::vector<std::string>& header, std::string_view name);

}  // namespace craft::csv

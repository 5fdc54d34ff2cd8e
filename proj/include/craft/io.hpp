#pragma once

#include <string>
#include <string_view>

namespace craft::io {

/// Reads a whole file; throws IoError naming the path.
std::string read_text(const std::string& path);

/// Writes through a sibling temp file and renames, so readers never see a partial file.
/// Creates missing parent directories.
void write_text(const std::string& path, std::string_view contents);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

/// Fixed-point with `decimals` digits; negative zero prints as zero.
std::string format_fixed(double v, int decimals);

}  // namespace craft::io

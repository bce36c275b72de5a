#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace chemred::csv {

/// Shortest decimal representation that parses back to the same double.
std::string format(double value);

/// Strict parse of a full field; throws std::invalid_argument on trailing
/// garbage or empty input.
double parse(std::string_view field);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column position by header name, or throws std::out_of_range.
  std::size_t column(std::string_view name) const;
};

/// Reads a comma-separated file with a header line. Blank lines and lines
/// starting with '#' are skipped. Throws IoError when the file cannot be
/// opened and std::invalid_argument on ragged rows.
Table read(const std::filesystem::path& path);

/// Joins fields with commas and a trailing newline.
std::string join(const std::vector<std::string>& fields);

}  // namespace chemred::csv

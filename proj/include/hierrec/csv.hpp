#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace hierrec::csv {

/// A parsed CSV document. Lines starting with '#' and blank lines are skipped.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> comments;
};

/// Reads a comma-separated table. `source` names the input in error messages.
Table read(std::istream& in, const std::string& source);
Table read_file(const std::string& path);

/// Strict decimal parse; throws ValidationError naming `context` on failure.
double parse_number(std::string_view cell, const std::string& context);

/// Shortest text that round-trips the value (at most 17 significant digits).
std::string format_number(double value);

}  // namespace hierrec::csv

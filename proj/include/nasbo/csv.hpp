#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nasbo {

/// Comma-separated table with `# key=value` metadata lines and a header row.
/// Fields are trimmed; quoting is not supported.
struct CsvTable {
  std::string source;
  std::map<std::string, std::string> meta;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> row_lines;

  std::optional<std::size_t> column(std::string_view name) const;
  /// Throws ParseError naming the header when the column is absent.
  std::size_t require_column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text, const std::string& source);
CsvTable read_csv_file(const std::string& path);

/// Parses a finite-or-not double; throws ParseError at `line` on junk.
double parse_double(std::string_view field, const std::string& source, std::size_t line);

/// Shortest text that round-trips to the same double.
std::string format_double(double value);

std::string read_text_file(const std::string& path);

}  // namespace nasbo

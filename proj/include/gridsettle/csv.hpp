#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace gridsettle::csv {

struct Row {
  std::size_t line = 0;  // 1-based line number in the source file
  std::vector<std::string> fields;
};

struct Table {
  std::string file;
  std::vector<std::string> header;
  std::vector<Row> rows;

  /// Column position of `name`, or npos.
  std::size_t column(std::string_view name) const;
};

/// Reads a comma-separated file with a mandatory header row. The leading
/// columns of the header must equal `required` in order; `optional` columns
/// may follow. Blank lines are skipped, a UTF-8 BOM is tolerated.
Table read(const std::filesystem::path& path, const std::vector<std::string>& required,
           const std::vector<std::string>& optional = {});

double parse_double(const Table& table, const Row& row, std::size_t column);
long parse_int(const Table& table, const Row& row, std::size_t column);
bool parse_bool(const Table& table, const Row& row, std::size_t column);
const std::string& field(const Table& table, const Row& row, std::size_t column);

/// Shortest decimal text that parses back to exactly `value`.
std::string shortest(double value);

/// Fixed six-decimal text used by every output file.
std::string fixed6(double value);

void write_line(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace gridsettle::csv

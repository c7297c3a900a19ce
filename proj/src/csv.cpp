#include "gridsettle/csv.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <system_error>

#include <fmt/format.h>

#include "gridsettle/error.hpp"

namespace gridsettle {

ParseError::ParseError(std::string file, std::size_t line, std::size_t column,
                       const std::string& what)
    : Error(fmt::format("{}:{}:{}: {}", file, line, column, what)),
      file_(std::move(file)),
      line_(line),
      column_(column) {}

namespace csv {
namespace {

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    auto piece = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
    while (!piece.empty() && (piece.front() == ' ' || piece.front() == '\t')) piece.remove_prefix(1);
    while (!piece.empty() && (piece.back() == ' ' || piece.back() == '\t')) piece.remove_suffix(1);
    out.emplace_back(piece);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

std::size_t Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::string::npos;
}

Table read(const std::filesystem::path& path, const std::vector<std::string>& required,
           const std::vector<std::string>& optional) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("missing file {}", path.string()));

  Table table;
  table.file = path.string();
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (line.find_first_not_of(" \t") == std::string::npos) continue;

    auto fields = split(line);
    if (!have_header) {
      if (fields.size() < required.size() || fields.size() > required.size() + optional.size()) {
        throw ParseError(table.file, line_no, 1,
                         fmt::format("expected header {}", fmt::join(required, ",")));
      }
      for (std::size_t i = 0; i < fields.size(); ++i) {
        const std::string& want = i < required.size() ? required[i] : optional[i - required.size()];
        if (fields[i] != want) {
          throw ParseError(table.file, line_no, i + 1,
                           fmt::format("header column '{}' should be '{}'", fields[i], want));
        }
      }
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw ParseError(table.file, line_no, std::min(fields.size(), table.header.size()) + 1,
                       fmt::format("expected {} fields, found {}", table.header.size(),
                                   fields.size()));
    }
    table.rows.push_back(Row{line_no, std::move(fields)});
  }
  if (!have_header) throw ParseError(table.file, 1, 1, "missing header row");
  return table;
}

const std::string& field(const Table& table, const Row& row, std::size_t column) {
  if (column >= row.fields.size()) {
    throw ParseError(table.file, row.line, column + 1, "missing field");
  }
  return row.fields[column];
}

double parse_double(const Table& table, const Row& row, std::size_t column) {
  const auto& text = field(table, row, column);
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || text.empty()) {
    throw ParseError(table.file, row.line, column + 1,
                     fmt::format("'{}' in column {} is not a number", text, table.header[column]));
  }
  return value;
}

long parse_int(const Table& table, const Row& row, std::size_t column) {
  const auto& text = field(table, row, column);
  long value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ParseError(table.file, row.line, column + 1,
                     fmt::format("'{}' in column {} is not an integer", text,
                                 table.header[column]));
  }
  return value;
}

bool parse_bool(const Table& table, const Row& row, std::size_t column) {
  const auto& text = field(table, row, column);
  if (text == "1" || text == "true" || text == "TRUE" || text == "True") return true;
  if (text == "0" || text == "false" || text == "FALSE" || text == "False") return false;
  throw ParseError(table.file, row.line, column + 1,
                   fmt::format("'{}' in column {} is not a boolean", text, table.header[column]));
}

std::string shortest(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  (void)ec;
  return std::string(buf, ptr);
}

std::string fixed6(double value) {
  auto text = fmt::format("{:.6f}", value);
  if (text == "-0.000000") text.erase(0, 1);
  return text;
}

void write_line(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << fields[i];
  }
  out << '\n';
}

}  // namespace csv
}  // namespace gridsettle

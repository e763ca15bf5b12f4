#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace genex::harness {

/// Empty cell (monostate) marks an undefined value.
using Cell = std::variant<std::monostate, std::string, std::int64_t, double, bool>;

/// A figure-data table written as `<name>.csv` and `<name>.json`.
struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  /// ConfigError when the row width differs from the column count.
  void add_row(std::vector<Cell> row);
};

/// CSV with a header row, RFC 4180 quoting and LF line ends; doubles use the shortest text that
/// round-trips.
std::string to_csv(const Table& table);

/// {"name": ..., "columns": [...], "rows": [{column: value, ...}, ...]}
std::string to_json(const Table& table);

std::string format_double(double v);

/// Writes both files under `dir` and returns their paths relative to `dir`.
std::vector<std::string> write_table(const std::filesystem::path& dir, const Table& table);

/// Writes `bytes` through a temporary file and a rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

}  // namespace genex::harness

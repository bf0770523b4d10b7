#pragma once

#include "json.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace esqpt {

namespace unit {
inline constexpr const char* energy = "h";
inline constexpr const char* time = "1/h";
inline constexpr const char* rate = "1/h";
inline constexpr const char* none = "dimensionless";
inline constexpr const char* spin = "spin units";
inline constexpr const char* angle = "rad";
}  // namespace unit

struct Column {
  std::string name;
  std::string unit;
  /// Header cell, e.g. "lyap[1/h]".
  std::string header() const { return name + "[" + unit + "]"; }
};

/// Numeric table with unit-annotated columns. Values print in shortest
/// round-trip form so identical inputs give identical bytes.
class ResultTable {
public:
  explicit ResultTable(std::vector<Column> columns);

  const std::vector<Column>& columns() const { return columns_; }
  const std::vector<std::vector<double>>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }

  /// Throws std::invalid_argument on a width mismatch.
  void add_row(std::vector<double> row);
  void append(const ResultTable& other);

  /// Index of a column by name; throws std::out_of_range when missing.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;
  std::vector<double> values(std::string_view name) const;

  std::string to_csv() const;

  nlohmann::json metadata = nlohmann::json::object();

private:
  std::vector<Column> columns_;
  std::vector<std::vector<double>> rows_;
};

/// Shortest decimal that round-trips; nan/inf as "nan", "inf", "-inf".
std::string format_number(double x);

/// Writes to a sibling temp file and renames it into place.
void atomic_write(const std::filesystem::path& path, std::string_view content);

/// <stem>.csv plus <stem>.meta.json holding the metadata.
void write_table(const ResultTable& table, const std::filesystem::path& csv_path);

}  // namespace esqpt

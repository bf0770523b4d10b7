#include "esqpt/table.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <system_error>

#include <unistd.h>

namespace esqpt {

ResultTable::ResultTable(std::vector<Column> columns) : columns_(std::move(columns)) {
  for (const auto& c : columns_) {
    if (c.unit.empty()) throw std::invalid_argument("ResultTable: column '" + c.name + "' has no unit");
  }
}

void ResultTable::add_row(std::vector<double> row) {
  if (row.size() != columns_.size()) {
    throw std::invalid_argument("ResultTable: row has " + std::to_string(row.size()) +
                                " values, expected " + std::to_string(columns_.size()));
  }
  rows_.push_back(std::move(row));
}

void ResultTable::append(const ResultTable& other) {
  if (other.columns_.size() != columns_.size()) throw std::invalid_argument("ResultTable: column mismatch");
  for (const auto& r : other.rows_) rows_.push_back(r);
}

std::size_t ResultTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name == name) return i;
  }
  throw std::out_of_range("ResultTable: no column '" + std::string(name) + "'");
}

bool ResultTable::has_column(std::string_view name) const {
  for (const auto& c : columns_) {
    if (c.name == name) return true;
  }
  return false;
}

std::vector<double> ResultTable::values(std::string_view name) const {
  const std::size_t k = column(name);
  std::vector<double> out;
  out.reserve(rows_.size());
  for (const auto& r : rows_) out.push_back(r[k]);
  return out;
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0.0) return "0";  // folds -0
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string ResultTable::to_csv() const {
  std::string out;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (i) out += ',';
    out += columns_[i].header();
  }
  out += "\r\n";
  for (const auto& r : rows_) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out += ',';
      out += format_number(r[i]);
    }
    out += "\r\n";
  }
  return out;
}

void atomic_write(const std::filesystem::path& path, std::string_view content) {
  static std::atomic<unsigned> counter{0};
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot rename into " + path.string() + ": " + ec.message());
  }
}

void write_table(const ResultTable& table, const std::filesystem::path& csv_path) {
  atomic_write(csv_path, table.to_csv());
  auto meta = csv_path;
  meta.replace_extension(".meta.json");
  nlohmann::json j = table.metadata;
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : table.columns()) cols.push_back({{"name", c.name}, {"unit", c.unit}});
  j["columns"] = cols;
  j["rows"] = table.size();
  atomic_write(meta, j.dump(2) + "\n");
}

}  // namespace esqpt

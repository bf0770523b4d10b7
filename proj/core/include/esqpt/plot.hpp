#pragma once

#include "esqpt/table.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace esqpt {

enum class PlotKind { line, scatter, heatmap };

struct PlotSpec {
  PlotKind kind = PlotKind::line;
  std::string x;
  std::vector<std::string> y;  // line/scatter: one series per column; heatmap: exactly one
  std::string z;               // heatmap value column
  /// Splits line/scatter rows into one series per distinct value.
  std::optional<std::string> group;
  std::string title;
};

/// Static SVG; axis labels carry the column units. Throws
/// std::invalid_argument when a named column is missing.
std::string render_svg(const ResultTable& table, const PlotSpec& spec);

void write_svg(const ResultTable& table, const PlotSpec& spec, const std::filesystem::path& path);

}  // namespace esqpt

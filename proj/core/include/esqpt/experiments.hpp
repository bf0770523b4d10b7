#pragma once

// Subcommands of the experiment runner. Each one reads its keys from a
// Config, runs a sweep over the cartesian product of its list-valued axes
// and writes <out>/<subcommand>.csv, a .meta.json sidecar and an SVG plot.

#include "esqpt/config.hpp"
#include "esqpt/table.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace esqpt {

struct RunOptions {
  std::filesystem::path out_dir = ".";
  std::filesystem::path cache_dir;  // empty: no on-disk spectral cache
  std::uint64_t seed = 0;
  unsigned threads = 1;
  bool plot = true;
  std::ostream* log = nullptr;  // progress lines; null for silence
};

struct RunReport {
  int exit_code = 0;                  // 0 ok, 2 some tasks failed
  std::vector<std::string> failures;  // one line per failed task
  std::vector<std::filesystem::path> files;
  ResultTable table{{}};
};

/// Raised for an unusable output directory.
struct OutputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const std::vector<std::string>& subcommand_names();
bool is_subcommand(const std::string& name);

/// Throws ConfigError for an unknown subcommand, a malformed value or an
/// unrecognised key; OutputError when the output directory is unusable.
/// Per-task failures are collected in the report (exit code 2) and logged to
/// <out>/<subcommand>.errors.log.
RunReport run_experiment(const std::string& subcommand, const Config& config, const RunOptions& opts);

/// Human-readable key list for --help.
std::string subcommand_help(const std::string& subcommand);

}  // namespace esqpt

#pragma once

// Flat key = value experiment configuration.
//
//   # comment
//   S = 50
//   v = [0, 5, 10]            list
//   phi0 = linspace(0, pi, 9) inclusive grid
//   E = 0.5, 1.0, 1.5         bare comma list
//
// Numbers accept the constant `pi` with * and / (e.g. pi/2, 0.25*pi).

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace esqpt {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Evaluates a scalar such as "2.5", "pi", "3*pi/4". Throws ConfigError.
double parse_number(std::string_view text);
/// Evaluates a list value (see above). A scalar yields a one-element list.
std::vector<double> parse_list(std::string_view text);

class Config {
public:
  Config() = default;
  static Config parse(std::string_view text);
  static Config load(const std::filesystem::path& path);

  /// Later assignments win; used for command-line overrides.
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  /// Missing key gives `fallback`; an explicit "[]" gives an empty list.
  std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback) const;

  /// Marks keys read by the experiment; used to reject typos.
  std::vector<std::string> unused_keys() const;

  /// Canonical "key = value" lines in key order.
  std::string serialize() const;
  std::uint64_t hash() const;
  const std::map<std::string, std::string>& entries() const { return values_; }

private:
  std::map<std::string, std::string> values_;
  mutable std::map<std::string, bool> used_;
};

}  // namespace esqpt

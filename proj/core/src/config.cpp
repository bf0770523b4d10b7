#include "esqpt/config.hpp"

#include "esqpt/spectral_cache.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace esqpt {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == ',') {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

// factor := [+-] (number | pi)
double parse_factor(std::string_view& s, std::string_view whole) {
  s = trim(s);
  double sign = 1.0;
  while (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    if (s.front() == '-') sign = -sign;
    s.remove_prefix(1);
    s = trim(s);
  }
  if (s.substr(0, 2) == "pi") {
    s.remove_prefix(2);
    return sign * std::numbers::pi;
  }
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr == s.data()) {
    throw ConfigError("not a number: '" + std::string(whole) + "'");
  }
  s.remove_prefix(static_cast<std::size_t>(ptr - s.data()));
  return sign * value;
}

}  // namespace

double parse_number(std::string_view text) {
  const std::string_view whole = trim(text);
  if (whole.empty()) throw ConfigError("empty number");
  std::string_view s = whole;
  double value = parse_factor(s, whole);
  for (s = trim(s); !s.empty(); s = trim(s)) {
    const char op = s.front();
    if (op != '*' && op != '/') throw ConfigError("not a number: '" + std::string(whole) + "'");
    s.remove_prefix(1);
    const double rhs = parse_factor(s, whole);
    value = op == '*' ? value * rhs : value / rhs;
  }
  if (!std::isfinite(value)) throw ConfigError("non-finite number: '" + std::string(whole) + "'");
  return value;
}

std::vector<double> parse_list(std::string_view text) {
  std::string_view s = trim(text);
  if (s.substr(0, 9) == "linspace(") {
    if (s.back() != ')') throw ConfigError("unterminated linspace: '" + std::string(s) + "'");
    const auto args = split_commas(s.substr(9, s.size() - 10));
    if (args.size() != 3) throw ConfigError("linspace takes (start, stop, count)");
    const double a = parse_number(args[0]);
    const double b = parse_number(args[1]);
    const double n = parse_number(args[2]);
    if (n < 0 || n != std::floor(n)) throw ConfigError("linspace count must be a non-negative integer");
    const auto count = static_cast<std::size_t>(n);
    std::vector<double> out(count);
    for (std::size_t k = 0; k < count; ++k) {
      out[k] = count == 1 ? a : a + (b - a) * static_cast<double>(k) / static_cast<double>(count - 1);
    }
    if (count > 1) out.back() = b;
    return out;
  }
  if (!s.empty() && s.front() == '[') {
    if (s.back() != ']') throw ConfigError("unterminated list: '" + std::string(s) + "'");
    s = trim(s.substr(1, s.size() - 2));
    if (s.empty()) return {};
  }
  std::vector<double> out;
  for (auto item : split_commas(s)) out.push_back(parse_number(item));
  return out;
}

Config Config::parse(std::string_view text) {
  Config c;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string_view body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key(trim(body.substr(0, eq)));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    c.set(key, std::string(trim(body.substr(eq + 1))));
  }
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void Config::set(const std::string& key, const std::string& value) { values_[key] = value; }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  used_[key] = true;
  return it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  used_[key] = true;
  try {
    return parse_number(it->second);
  } catch (const ConfigError& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
  const double v = get_double(key, static_cast<double>(fallback));
  if (v != std::floor(v)) throw ConfigError(key + ": expected an integer");
  return static_cast<std::int64_t>(v);
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  used_[key] = true;
  std::uint64_t v = 0;
  const std::string& s = it->second;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ConfigError(key + ": expected an unsigned integer");
  }
  return v;
}

std::vector<double> Config::get_list(const std::string& key, const std::vector<double>& fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  used_[key] = true;
  try {
    return parse_list(it->second);
  } catch (const ConfigError& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

std::vector<std::string> Config::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) {
    if (!used_.count(k)) out.push_back(k);
  }
  return out;
}

std::string Config::serialize() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

std::uint64_t Config::hash() const {
  const std::string s = serialize();
  return fnv1a(s.data(), s.size());
}

}  // namespace esqpt

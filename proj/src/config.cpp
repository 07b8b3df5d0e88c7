#include "gv/config.hpp"

#include <climits>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "gv/dataio.hpp"
#include "gv/errors.hpp"

namespace gv {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::parse_text(const std::string& text, const std::string& source) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = source + ":" + std::to_string(lineno);
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const size_t eq = t.find('=');
    if (eq == std::string::npos)
      fail(errc::parse_error, where + ": expected key=value, got '" + t + "'");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) fail(errc::parse_error, where + ": empty key");
    if (cfg.kv_.count(key)) fail(errc::parse_error, where + ": duplicate key '" + key + "'");
    cfg.kv_[key] = value;
  }
  return cfg;
}

Config Config::load(const std::string& path) { return parse_text(read_file(path), path); }

std::string Config::get_str(const std::string& key, const std::string& def) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? def : it->second;
}

double Config::get_double(const std::string& key, double def) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return def;
  const char* s = it->second.c_str();
  char* end = nullptr;
  const double v = std::strtod(s, &end);
  if (end == s || *end != '\0' || !std::isfinite(v))
    fail(errc::parse_error, "config key '" + key + "': not a number: '" + it->second + "'");
  return v;
}

int Config::get_int(const std::string& key, int def) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return def;
  const char* s = it->second.c_str();
  char* end = nullptr;
  const long v = std::strtol(s, &end, 10);
  if (end == s || *end != '\0' || v < INT_MIN || v > INT_MAX)
    fail(errc::parse_error, "config key '" + key + "': not an integer: '" + it->second + "'");
  return static_cast<int>(v);
}

uint64_t Config::get_u64(const std::string& key, uint64_t def) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return def;
  const char* s = it->second.c_str();
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s, &end, 10);
  if (end == s || *end != '\0' || it->second[0] == '-')
    fail(errc::parse_error, "config key '" + key + "': not a non-negative integer: '" +
                                it->second + "'");
  return v;
}

bool Config::get_bool(const std::string& key, bool def) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return def;
  const std::string& v = it->second;
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail(errc::parse_error, "config key '" + key + "': not a boolean: '" + v + "'");
}

void Config::restrict_keys(const std::vector<std::string>& allowed) const {
  for (const auto& [key, value] : kv_) {
    bool ok = false;
    for (const auto& a : allowed) ok |= a == key;
    if (!ok) fail(errc::parse_error, "unknown config key '" + key + "'");
  }
}

std::string Config::echo() const {
  std::string out;
  for (const auto& [key, value] : kv_) out += key + "=" + value + "\n";
  return out;
}

}  // namespace gv

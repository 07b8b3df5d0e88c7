#pragma once

// Flat key=value run configuration. Grammar, one entry per line:
//   key = value        (whitespace around key and value is trimmed)
//   # comment          (blank lines skipped, CRLF tolerated)
// Keys may not repeat within a file. Typed getters validate on access.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace gv {

class Config {
 public:
  Config() = default;

  static Config parse_text(const std::string& text, const std::string& source);
  static Config load(const std::string& path);  // io_error / parse_error

  void set(const std::string& key, const std::string& value) { kv_[key] = value; }
  bool has(const std::string& key) const { return kv_.count(key) > 0; }

  std::string get_str(const std::string& key, const std::string& def) const;
  double get_double(const std::string& key, double def) const;
  int get_int(const std::string& key, int def) const;
  uint64_t get_u64(const std::string& key, uint64_t def) const;
  bool get_bool(const std::string& key, bool def) const;  // true/false/1/0

  // Typo guard: every present key must appear in allowed.
  void restrict_keys(const std::vector<std::string>& allowed) const;

  // Deterministic sorted "key=value" lines (std::map keeps key order).
  std::string echo() const;

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

}  // namespace gv

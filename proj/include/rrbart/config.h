#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace rrbart {

// Nested key-value text:
//   # comment
//   [section]
//   key = value          -> "section.key"
//   sub.key = value      -> "section.sub.key"
// Later assignments override earlier ones.
class Config {
 public:
  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  void merge(const Config& other);

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const;
  std::vector<std::string> get_strings(const std::string& key, std::vector<std::string> fallback) const;

  // Keys under "prefix." with the prefix stripped.
  Config subtree(const std::string& prefix) const;

  // Flat "key = value" lines in key order; parse(dump()) == *this.
  std::string dump() const;
  const std::map<std::string, std::string>& values() const { return values_; }
  bool operator==(const Config&) const = default;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace rrbart

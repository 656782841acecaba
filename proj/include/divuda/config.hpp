#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace divuda {

/// Flat `key = value` configuration with dotted keys.
///
///   # comment
///   classes.common = 0, 1
///   noise.kind = symmetric
///
/// Keys are unique; values are kept as trimmed strings and converted on access.
class KeyValueConfig {
 public:
  // Throws ParseError naming the line on malformed input or duplicate keys.
  static KeyValueConfig parse(const std::string& text);
  static KeyValueConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  void erase(const std::string& key) { values_.erase(key); }
  const std::map<std::string, std::string>& entries() const noexcept { return values_; }

  // Accessors throw ConfigError naming the key when the value does not convert.
  std::string get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::optional<double> get_optional_double(const std::string& key) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<int> get_int_list(const std::string& key) const;
  std::vector<double> get_double_list(const std::string& key) const;
  std::vector<std::string> get_list(const std::string& key) const;

  // Canonical text (sorted keys), used for hashing.
  std::string canonical() const;

 private:
  std::map<std::string, std::string> values_;
};

// Splits on commas and trims; empty input gives an empty list.
std::vector<std::string> split_list(const std::string& value);

// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(const std::string& text);

}  // namespace divuda

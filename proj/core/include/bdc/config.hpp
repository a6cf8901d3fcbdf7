#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace bdc {

/// Flat key=value configuration. Layers merge left to right, later layers win.
class Config {
 public:
  /// Lines "key = value"; '#' starts a comment; blank lines are ignored.
  static Config parse(const std::string& text);
  static Config load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  /// Overlays every key of `other` onto this config.
  void merge(const Config& other);

  std::string get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  long long get_int(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  /// Comma-separated integers, e.g. "4,5,6".
  std::vector<long long> get_int_list(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

std::vector<long long> parse_int_list(const std::string& text);

}  // namespace bdc

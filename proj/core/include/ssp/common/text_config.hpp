#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ssp {

// Line-oriented `key = value` text with `[section]` headers. Keys are stored
// flattened as "section.key". Comments start with '#'.
class TextConfig {
 public:
  static TextConfig parse(const std::string& text);
  static TextConfig load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback) const;

  // Serializes grouped by section in key order; parse(serialize()) == *this.
  std::string serialize() const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace ssp

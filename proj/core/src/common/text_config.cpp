#include "ssp/common/text_config.hpp"

#include <charconv>
#include <sstream>

#include "ssp/common/binary_io.hpp"
#include "ssp/common/error.hpp"

namespace ssp {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
  return v;
}

double parse_double(const std::string& key, const std::string& text) {
  double out = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError(key, "expected a number, got '" + text + "'");
  return out;
}

}  // namespace

TextConfig TextConfig::parse(const std::string& text) {
  TextConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno), "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno), "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno), "empty key");
    cfg.values_[section.empty() ? key : section + "." + key] = unquote(trim(line.substr(eq + 1)));
  }
  return cfg;
}

TextConfig TextConfig::load(const std::string& path) { return parse(io::read_text_file(path)); }

std::optional<std::string> TextConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

double TextConfig::get_double(const std::string& key, double fallback) const {
  auto v = get(key);
  return v ? parse_double(key, *v) : fallback;
}

long long TextConfig::get_int(const std::string& key, long long fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  long long out = 0;
  const auto* end = v->data() + v->size();
  auto [ptr, ec] = std::from_chars(v->data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError(key, "expected an integer, got '" + *v + "'");
  return out;
}

bool TextConfig::get_bool(const std::string& key, bool fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1") return true;
  if (*v == "false" || *v == "0") return false;
  throw ConfigError(key, "expected true/false, got '" + *v + "'");
}

std::string TextConfig::get_string(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

std::vector<double> TextConfig::get_list(const std::string& key, const std::vector<double>& fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  std::string body = trim(*v);
  if (body.size() < 2 || body.front() != '[' || body.back() != ']') {
    throw ConfigError(key, "expected a list like [1, 2, 3]");
  }
  body = body.substr(1, body.size() - 2);
  std::vector<double> out;
  std::istringstream in(body);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_double(key, item));
  }
  return out;
}

std::string TextConfig::serialize() const {
  std::map<std::string, std::map<std::string, std::string>> sections;
  for (const auto& [k, v] : values_) {
    const auto dot = k.find('.');
    if (dot == std::string::npos) {
      sections[""][k] = v;
    } else {
      sections[k.substr(0, dot)][k.substr(dot + 1)] = v;
    }
  }
  std::ostringstream out;
  bool first = true;
  for (const auto& [section, kv] : sections) {
    if (!section.empty()) {
      if (!first) out << '\n';
      out << '[' << section << "]\n";
    }
    for (const auto& [k, v] : kv) out << k << " = " << v << '\n';
    first = false;
  }
  return out.str();
}

}  // namespace ssp

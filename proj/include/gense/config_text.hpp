// Copyright 2026 The gense Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gense/error.hpp"

// Key-value text used by config files and checkpoint headers:
//
//   # comment
//   [section]
//   key = value
//
// Keys before the first section header belong to section "".
namespace gense::config {

using KeyValues = std::map<std::string, std::string>;

struct Section {
  std::string name;
  KeyValues values;
  std::vector<std::pair<std::string, int>> order;  // key, line number
};

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
}

// Sections in file order; a repeated section or key is an error.
inline std::vector<Section> parse_sections(const std::string& text, const std::string& origin = "config") {
  std::vector<Section> out(1);
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']') throw FormatError(where + ": unterminated section header '" + line + "'");
      const std::string name = trim(line.substr(1, line.size() - 2));
      if (name.empty()) throw FormatError(where + ": empty section name");
      for (const auto& s : out)
        if (s.name == name) throw ConfigError(where + ": section [" + name + "] appears twice");
      out.push_back({name, {}, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError(where + ": expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw FormatError(where + ": missing key before '='");
    auto& sec = out.back();
    if (sec.values.count(key))
      throw ConfigError(where + ": key '" + (sec.name.empty() ? key : sec.name + "." + key) + "' set twice");
    sec.values[key] = trim(line.substr(eq + 1));
    sec.order.emplace_back(key, lineno);
  }
  if (out.front().values.empty()) out.erase(out.begin());
  return out;
}

inline const Section* find_section(const std::vector<Section>& secs, const std::string& name) {
  for (const auto& s : secs)
    if (s.name == name) return &s;
  return nullptr;
}

inline int to_int(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    const long v = std::stol(value, &used);
    if (used != value.size() || v < INT32_MIN || v > INT32_MAX) throw std::invalid_argument(value);
    return static_cast<int>(v);
  } catch (const std::logic_error&) {
    throw ConfigError(key + ": expected an integer, got '" + value + "'");
  }
}

inline uint64_t to_u64(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    if (!value.empty() && value[0] == '-') throw std::invalid_argument(value);
    const unsigned long long v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::logic_error&) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + value + "'");
  }
}

inline double to_double(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::logic_error&) {
    throw ConfigError(key + ": expected a number, got '" + value + "'");
  }
}

inline bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + value + "'");
}

inline std::vector<std::string> split(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, sep)) out.push_back(trim(tok));
  return out;
}

inline std::vector<int> to_ints(const std::string& key, const std::string& value) {
  std::vector<int> out;
  for (const auto& tok : split(value)) out.push_back(to_int(key, tok));
  return out;
}

inline std::vector<double> to_doubles(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (const auto& tok : split(value)) out.push_back(to_double(key, tok));
  return out;
}

template <class V>
std::string join(const std::vector<V>& v) {
  std::ostringstream os;
  os.precision(17);
  for (size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

}  // namespace gense::config

#pragma once

// Flat sectioned key-value configuration.
//
//   file    := { line }
//   line    := blank | comment | section | entry
//   comment := '#' ...
//   section := '[' name ']'
//   entry   := key '=' value [ '#' ... ]
//
// Keys are addressed as "section.key" (keys before any section live in the
// unnamed section and are addressed by the bare key). Section names use
// [a-z0-9], keys [a-z0-9_]. Lists are comma separated.
//
// Environment variables override file values: COEXSIM_<SECTION>_<KEY> in upper
// case sets "section.key", COEXSIM_<KEY> sets a bare key. Since section names
// carry no underscore the split is unambiguous.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "coexsim/error.hpp"

namespace coexsim {

inline constexpr const char* kEnvPrefix = "COEXSIM_";

class ConfigFile {
 public:
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, std::string>& values() const noexcept { return values_; }

  std::optional<std::string> raw(const std::string& key) const {
    used_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    return raw(key).value_or(fallback);
  }
  std::string require_string(const std::string& key) const {
    auto v = raw(key);
    if (!v || v->empty()) throw ConfigError(key, "missing required value");
    return *v;
  }
  double get_double(const std::string& key, double fallback) const {
    auto v = raw(key);
    return v ? to_double(key, *v) : fallback;
  }
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
    auto v = raw(key);
    return v ? to_u64(key, *v) : fallback;
  }
  bool get_bool(const std::string& key, bool fallback) const {
    auto v = raw(key);
    if (!v) return fallback;
    std::string s = lower(*v);
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ConfigError(key, "expected a boolean, got '" + *v + "'");
  }
  std::vector<double> get_list(const std::string& key, std::vector<double> fallback) const {
    auto v = raw(key);
    if (!v) return fallback;
    std::vector<double> out;
    std::stringstream ss(*v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
    if (out.empty()) throw ConfigError(key, "empty list");
    return out;
  }

  /// Keys present in the file that no getter asked for.
  std::vector<std::string> unused() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_)
      if (!used_.count(k)) out.push_back(k);
    return out;
  }

  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
  }
  static std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
  }
  static double to_double(const std::string& key, const std::string& s) {
    double v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
      throw ConfigError(key, "expected a number, got '" + s + "'");
    return v;
  }
  static std::uint64_t to_u64(const std::string& key, const std::string& s) {
    std::uint64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
      throw ConfigError(key, "expected a non-negative integer, got '" + s + "'");
    return v;
  }

 private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

namespace detail {
inline bool valid_name(const std::string& s, bool allow_underscore) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [&](unsigned char c) {
    return std::islower(c) || std::isdigit(c) || (allow_underscore && c == '_');
  });
}
}  // namespace detail

inline ConfigFile parse_config(std::istream& in, const std::string& source = "config") {
  ConfigFile cfg;
  std::string line, section;
  std::size_t lineno = 0;
  auto where = [&] { return source + ":" + std::to_string(lineno); };
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = ConfigFile::trim(line);
    if (s.empty() || s[0] == '#') continue;
    if (s[0] == '[') {
      if (s.back() != ']') throw ConfigError(where(), "unterminated section header");
      section = ConfigFile::trim(s.substr(1, s.size() - 2));
      if (!detail::valid_name(section, false)) throw ConfigError(where(), "bad section name '" + section + "'");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(where(), "expected 'key = value'");
    const std::string key = ConfigFile::trim(s.substr(0, eq));
    std::string value = s.substr(eq + 1);
    if (auto hash = value.find('#'); hash != std::string::npos) value.erase(hash);
    value = ConfigFile::trim(value);
    if (!detail::valid_name(key, true)) throw ConfigError(where(), "bad key '" + key + "'");
    const std::string full = section.empty() ? key : section + "." + key;
    if (cfg.has(full)) throw ConfigError(full, "duplicate key at " + where());
    cfg.set(full, value);
  }
  return cfg;
}

inline ConfigFile load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open '" + path + "'");
  return parse_config(in, path);
}

/// Environment name of a key: "model.side" -> COEXSIM_MODEL_SIDE.
inline std::string env_name(const std::string& key) {
  std::string out = kEnvPrefix;
  for (unsigned char c : key) out += c == '.' ? '_' : static_cast<char>(std::toupper(c));
  return out;
}

/// Key addressed by an environment name, or nullopt when it is not a COEXSIM_ name.
inline std::optional<std::string> key_from_env(const std::string& name) {
  const std::string prefix = kEnvPrefix;
  if (name.rfind(prefix, 0) != 0 || name.size() == prefix.size()) return std::nullopt;
  const std::string rest = ConfigFile::lower(name.substr(prefix.size()));
  const auto us = rest.find('_');
  std::string key = us == std::string::npos ? rest : rest.substr(0, us) + "." + rest.substr(us + 1);
  const auto dot = key.find('.');
  const bool ok = dot == std::string::npos
                      ? detail::valid_name(key, true)
                      : detail::valid_name(key.substr(0, dot), false) && detail::valid_name(key.substr(dot + 1), true);
  if (!ok) throw ConfigError(name, "malformed environment override name");
  return key;
}

/// Applies "NAME=value" entries whose name starts with COEXSIM_.
inline void apply_env_overrides(ConfigFile& cfg, const std::vector<std::string>& environment) {
  for (const auto& entry : environment) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos) continue;
    if (auto key = key_from_env(entry.substr(0, eq))) cfg.set(*key, entry.substr(eq + 1));
  }
}

}  // namespace coexsim

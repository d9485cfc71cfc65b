#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "perc/lattice.hpp"

namespace perc {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ValueType { String, Int, UInt64, Double, IntList, DoubleList };

struct KeySpec {
  const char* key;
  ValueType type;
  const char* fallback;  // empty means unset unless a command default applies
  double min = -std::numeric_limits<double>::infinity();
  double max = std::numeric_limits<double>::infinity();
  bool min_open = false;
  const char* help = "";
};

inline const std::vector<KeySpec>& config_schema() {
  constexpr double inf = std::numeric_limits<double>::infinity();
  static const std::vector<KeySpec> schema = {
      {"command", ValueType::String, "", -inf, inf, false, "experiment name"},
      {"seed", ValueType::UInt64, "1", 0, inf, false, "master seed"},
      {"workers", ValueType::Int, "1", 0, 4096, false, "worker threads, 0 for all cores"},
      {"region", ValueType::String, "parallelogram(32,16)", -inf, inf, false, "lattice region"},
      {"p", ValueType::Double, "0.5", 0, 1, false, "site probability"},
      {"n", ValueType::Int, "32", 0, 1 << 20, false, "scale"},
      {"n_samples", ValueType::Int, "1000", 1, 1e12, false, "Monte Carlo samples"},
      {"sizes", ValueType::IntList, "8,16,32,64", 1, 1 << 20, false, "scales for arm curves"},
      {"event", ValueType::String, "one_arm", -inf, inf, false, "arm event"},
      {"x", ValueType::Double, "0.5", 0, 1, false, "fraction along CA"},
      {"kappa", ValueType::Double, "6", 0, inf, false, "driving diffusivity"},
      {"dt", ValueType::Double, "0.001", 0, inf, true, "time step"},
      {"t", ValueType::Double, "1", 0, inf, false, "time horizon or capacity"},
      {"b", ValueType::Double, "0", 0, inf, false, "derivative exponent"},
      {"x0", ValueType::Double, "3.141592653589793", 0, 6.283185307179586, false, "diffusion start"},
      {"mode", ValueType::String, "", -inf, inf, false, "command variant"},
      {"eps", ValueType::Double, "0.02", 0, 0.5, true, "crossing deficit"},
      {"p_values", ValueType::DoubleList, "0.52,0.54,0.56,0.58", 0, 1, false, "near-critical p grid"},
      {"budget", ValueType::Int, "4096", 1, 1 << 20, false, "largest scale searched"},
      {"object", ValueType::String, "config", -inf, inf, false, "render target"},
      {"input", ValueType::String, "", -inf, inf, false, "input file"},
      {"output", ValueType::String, "", -inf, inf, false, "output file, stdout when empty"},
      {"format", ValueType::String, "csv", -inf, inf, false, "csv or jsonl"},
      {"svg", ValueType::String, "", -inf, inf, false, "SVG file"},
      {"expect", ValueType::Double, "", -inf, inf, false, "gate target"},
      {"tolerance", ValueType::Double, "0", 0, inf, false, "gate slack added to 4 sigma"},
      {"slope_min", ValueType::Double, "", -inf, inf, false, "gate on fitted slope"},
      {"slope_max", ValueType::Double, "", -inf, inf, false, "gate on fitted slope"},
  };
  return schema;
}

/// Defaults that differ per command.
inline const char* command_default(const std::string& command, const std::string& key) {
  static const std::map<std::pair<std::string, std::string>, const char*> table = {
      {{"sle", "n"}, "128"},         {{"sle", "t"}, "0.02"},        {{"sle", "n_samples"}, "500"},
      {{"explore", "mode"}, "chordal"}, {{"driving", "mode"}, "chordal"}, {{"diffusion", "mode"}, "absorb"},
      {{"render", "region"}, "hexagon(1)"}, {{"cardy", "n"}, "64"}, {{"cardy", "tolerance"}, "0.03"},
  };
  auto it = table.find({command, key});
  return it == table.end() ? nullptr : it->second;
}

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"sample", "crossing", "arms", "cardy", "explore",   "driving",
                                                 "sle",    "diffusion", "nearcritical", "fit", "render"};
  return names;
}

inline const KeySpec* find_key(const std::string& key) {
  for (const auto& k : config_schema())
    if (key == k.key) return &k;
  return nullptr;
}

namespace detail {

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ',')) out.push_back(trim(cur));
  return out;
}

inline std::string format_double(double x) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

template <class T>
bool parse_number(const std::string& s, T& out) {
  if (s.empty()) return false;
  const char* b = s.data();
  const char* e = b + s.size();
  if constexpr (std::is_unsigned_v<T>)
    if (*b == '-') return false;
  if (*b == '+') ++b;
  auto r = std::from_chars(b, e, out);
  return r.ec == std::errc() && r.ptr == e;
}

inline std::string canonical_value(const KeySpec& spec, const std::string& raw) {
  const std::string text = trim(raw);
  auto fail = [&](const std::string& why) -> std::string {
    throw ConfigError("key '" + std::string(spec.key) + "': " + why);
  };
  auto check_range = [&](double v) {
    if (!(v >= spec.min && v <= spec.max) || (spec.min_open && v == spec.min))
      fail("value " + format_double(v) + " out of range");
  };
  switch (spec.type) {
    case ValueType::String: {
      if (text.empty()) fail("empty value");
      if (text.find_first_of("\n#") != std::string::npos) fail("invalid character");
      return text;
    }
    case ValueType::Int: {
      long long v = 0;
      if (!parse_number(text, v)) fail("expected an integer, got '" + text + "'");
      check_range(static_cast<double>(v));
      return std::to_string(v);
    }
    case ValueType::UInt64: {
      std::uint64_t v = 0;
      if (!parse_number(text, v)) fail("expected an unsigned integer, got '" + text + "'");
      return std::to_string(v);
    }
    case ValueType::Double: {
      double v = 0;
      if (!parse_number(text, v) || !std::isfinite(v)) fail("expected a number, got '" + text + "'");
      check_range(v);
      return format_double(v);
    }
    case ValueType::IntList:
    case ValueType::DoubleList: {
      std::string out;
      auto items = split_list(text);
      if (items.empty()) fail("empty list");
      for (const auto& it : items) {
        std::string c;
        if (spec.type == ValueType::IntList) {
          long long v = 0;
          if (!parse_number(it, v)) fail("expected integers, got '" + it + "'");
          check_range(static_cast<double>(v));
          c = std::to_string(v);
        } else {
          double v = 0;
          if (!parse_number(it, v) || !std::isfinite(v)) fail("expected numbers, got '" + it + "'");
          check_range(v);
          c = format_double(v);
        }
        out += (out.empty() ? "" : ",") + c;
      }
      return out;
    }
  }
  return text;
}

}  // namespace detail

/// FNV-1a, 64 bit.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

struct ConfigProvenance {
  std::string path;
  std::uint64_t hash = 0;
  bool from_file = false;
};

/// Validated key = value settings. Only explicitly set keys are stored; reads
/// fall back to command defaults and then schema defaults.
class ExperimentConfig {
 public:
  ConfigProvenance provenance;

  void set(const std::string& key, const std::string& value) {
    const KeySpec* spec = find_key(key);
    if (!spec) throw ConfigError("unknown key '" + key + "'");
    std::string canon = detail::canonical_value(*spec, value);
    if (key == "command" && std::find(command_names().begin(), command_names().end(), canon) == command_names().end())
      throw ConfigError("unknown command '" + canon + "'");
    if (key == "region") {
      try {
        canon = parse_region(canon).describe();
      } catch (const std::exception& e) {
        throw ConfigError("key 'region': " + std::string(e.what()));
      }
    }
    if (key == "format" && canon != "csv" && canon != "jsonl") throw ConfigError("key 'format': expected csv or jsonl");
    values_[key] = canon;
  }

  void unset(const std::string& key) { values_.erase(key); }
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, std::string>& explicit_values() const { return values_; }

  std::string command() const { return raw("command").value_or(""); }

  std::optional<std::string> raw(const std::string& key) const {
    const KeySpec* spec = find_key(key);
    if (!spec) throw ConfigError("unknown key '" + key + "'");
    auto it = values_.find(key);
    if (it != values_.end()) return it->second;
    if (key != "command") {
      auto c = values_.find("command");
      if (c != values_.end())
        if (const char* d = command_default(c->second, key)) return std::string(d);
    }
    if (*spec->fallback) return std::string(spec->fallback);
    return std::nullopt;
  }

  bool present(const std::string& key) const { return raw(key).has_value(); }

  std::string get_string(const std::string& key) const { return need(key); }
  double get_double(const std::string& key) const { return std::stod(need(key)); }
  long long get_int(const std::string& key) const { return std::stoll(need(key)); }
  std::uint64_t get_u64(const std::string& key) const { return std::stoull(need(key)); }
  std::vector<double> get_doubles(const std::string& key) const {
    std::vector<double> out;
    for (auto& s : detail::split_list(need(key))) out.push_back(std::stod(s));
    return out;
  }
  std::vector<int> get_ints(const std::string& key) const {
    std::vector<int> out;
    for (auto& s : detail::split_list(need(key))) out.push_back(std::stoi(s));
    return out;
  }

  /// Explicit keys in schema order, one `key = value` line each.
  std::string serialize() const {
    std::string out;
    for (const auto& k : config_schema()) {
      auto it = values_.find(k.key);
      if (it != values_.end()) out += std::string(k.key) + " = " + it->second + "\n";
    }
    return out;
  }

  /// Every key with a value after defaults, in schema order, except `workers`,
  /// which never changes results.
  std::vector<std::pair<std::string, std::string>> resolved() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& k : config_schema()) {
      if (std::string(k.key) == "workers") continue;
      if (auto v = raw(k.key)) out.push_back({k.key, *v});
    }
    return out;
  }

 private:
  std::string need(const std::string& key) const {
    auto v = raw(key);
    if (!v) throw ConfigError("missing value for '" + key + "'");
    return *v;
  }

  std::map<std::string, std::string> values_;
};

/// Parses the line-oriented format; errors carry the line number.
inline ExperimentConfig parse_config(const std::string& text, const std::string& source_path = "") {
  ExperimentConfig cfg;
  cfg.provenance.path = source_path;
  cfg.provenance.hash = fnv1a(text);
  cfg.provenance.from_file = true;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    std::string key = detail::trim(line.substr(0, eq));
    std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty() || key.find_first_not_of("abcdefghijklmnopqrstuvwxyz0123456789_") != std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": invalid key '" + key + "'");
    if (cfg.has(key)) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    try {
      cfg.set(key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

/// Seeds an unset `seed` from PERC_SEED.
inline void apply_environment(ExperimentConfig& cfg) {
  if (cfg.has("seed")) return;
  if (const char* env = std::getenv("PERC_SEED")) {
    try {
      cfg.set("seed", env);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("PERC_SEED: ") + e.what());
    }
  }
}

}  // namespace perc

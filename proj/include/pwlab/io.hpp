#pragma once
// Scenario configuration files and fixed-precision text emission.
//
// Config grammar (one file describes one scenario):
//   [section]            opens a table; [a.b] nests
//   key = value          value: number | "string" | true | false | [v1, v2, ...]
//   # comment            whole-line or trailing, outside quotes
// Arrays are homogeneous (all numbers or all strings) and single-line.
// Accessors address entries as "section.key".  Callers validate the key set
// up front so a typo fails the run instead of silently hitting a default.

#include "pwlab/common.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace pwlab {

struct ConfigValue {
  enum class Kind { number, text, boolean, number_list, text_list };
  Kind kind = Kind::number;
  double num = 0.0;
  bool flag = false;
  std::string text;
  std::vector<double> nums;
  std::vector<std::string> texts;
  int line = 0;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline bool valid_key_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
}

// Strip a trailing comment, honoring double quotes.
inline std::string strip_comment(const std::string& s) {
  bool in_str = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (in_str) {
      if (c == '\\') ++i;
      else if (c == '"') in_str = false;
    } else if (c == '"') {
      in_str = true;
    } else if (c == '#') {
      return s.substr(0, i);
    }
  }
  return s;
}

inline std::string parse_quoted(const std::string& s, int line) {
  if (s.size() < 2 || s.front() != '"' || s.back() != '"')
    throw ConfigError("line " + std::to_string(line) + ": malformed string " + s);
  std::string out;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    char c = s[i];
    if (c == '\\') {
      if (i + 2 >= s.size())
        throw ConfigError("line " + std::to_string(line) + ": dangling escape");
      ++i;
      c = s[i];
      if (c != '"' && c != '\\')
        throw ConfigError("line " + std::to_string(line) + ": unknown escape \\" +
                          std::string(1, c));
    }
    out.push_back(c);
  }
  return out;
}

inline bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

// Split a bracketed array body on commas outside quotes.
inline std::vector<std::string> split_items(const std::string& body, int line) {
  std::vector<std::string> items;
  std::string cur;
  bool in_str = false;
  for (std::size_t i = 0; i < body.size(); ++i) {
    const char c = body[i];
    if (in_str) {
      cur.push_back(c);
      if (c == '\\' && i + 1 < body.size()) cur.push_back(body[++i]);
      else if (c == '"') in_str = false;
    } else if (c == '"') {
      cur.push_back(c);
      in_str = true;
    } else if (c == ',') {
      items.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (in_str) throw ConfigError("line " + std::to_string(line) + ": unterminated string");
  const std::string last = trim(cur);
  if (!last.empty()) items.push_back(last);
  for (const std::string& it : items)
    if (it.empty()) throw ConfigError("line " + std::to_string(line) + ": empty array item");
  return items;
}

inline ConfigValue parse_value(const std::string& raw, int line) {
  ConfigValue v;
  v.line = line;
  const std::string s = trim(raw);
  if (s.empty()) throw ConfigError("line " + std::to_string(line) + ": missing value");
  if (s.front() == '"') {
    v.kind = ConfigValue::Kind::text;
    v.text = parse_quoted(s, line);
    return v;
  }
  if (s == "true" || s == "false") {
    v.kind = ConfigValue::Kind::boolean;
    v.flag = (s == "true");
    return v;
  }
  if (s.front() == '[') {
    if (s.back() != ']')
      throw ConfigError("line " + std::to_string(line) + ": array must close on the same line");
    const std::vector<std::string> items = split_items(s.substr(1, s.size() - 2), line);
    if (items.empty())
      throw ConfigError("line " + std::to_string(line) + ": empty arrays are not allowed");
    if (items.front().front() == '"') {
      v.kind = ConfigValue::Kind::text_list;
      for (const std::string& it : items) v.texts.push_back(parse_quoted(it, line));
    } else {
      v.kind = ConfigValue::Kind::number_list;
      for (const std::string& it : items) {
        double d = 0.0;
        if (!parse_number(it, d))
          throw ConfigError("line " + std::to_string(line) + ": not a number: " + it);
        v.nums.push_back(d);
      }
    }
    return v;
  }
  double d = 0.0;
  if (!parse_number(s, d))
    throw ConfigError("line " + std::to_string(line) + ": cannot read value `" + s + "`");
  v.kind = ConfigValue::Kind::number;
  v.num = d;
  return v;
}

}  // namespace detail

class Config {
 public:
  static Config parse(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line = 0;
    while (std::getline(in, raw)) {
      ++line;
      const std::string s = detail::trim(detail::strip_comment(raw));
      if (s.empty()) continue;
      if (s.front() == '[') {
        if (s.back() != ']')
          throw ConfigError("line " + std::to_string(line) + ": unterminated table header");
        section = detail::trim(s.substr(1, s.size() - 2));
        if (section.empty())
          throw ConfigError("line " + std::to_string(line) + ": empty table name");
        for (char c : section)
          if (!detail::valid_key_char(c))
            throw ConfigError("line " + std::to_string(line) + ": bad table name `" + section +
                              "`");
        continue;
      }
      const std::size_t eq = s.find('=');
      if (eq == std::string::npos)
        throw ConfigError("line " + std::to_string(line) + ": expected key = value");
      const std::string key = detail::trim(s.substr(0, eq));
      if (key.empty())
        throw ConfigError("line " + std::to_string(line) + ": missing key");
      for (char c : key)
        if (!detail::valid_key_char(c) || c == '.')
          throw ConfigError("line " + std::to_string(line) + ": bad key `" + key + "`");
      const std::string full = section.empty() ? key : section + "." + key;
      if (cfg.entries_.count(full))
        throw ConfigError("line " + std::to_string(line) + ": duplicate key `" + full + "`");
      cfg.entries_[full] = detail::parse_value(s.substr(eq + 1), line);
    }
    return cfg;
  }

  static Config parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
  }

  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  double num(const std::string& key) const {
    return fetch(key, ConfigValue::Kind::number).num;
  }
  double num_or(const std::string& key, double dflt) const {
    return has(key) ? num(key) : dflt;
  }
  std::string text(const std::string& key) const {
    return fetch(key, ConfigValue::Kind::text).text;
  }
  std::string text_or(const std::string& key, const std::string& dflt) const {
    return has(key) ? text(key) : dflt;
  }
  bool flag_or(const std::string& key, bool dflt) const {
    return has(key) ? fetch(key, ConfigValue::Kind::boolean).flag : dflt;
  }
  std::vector<double> nums(const std::string& key) const {
    return fetch(key, ConfigValue::Kind::number_list).nums;
  }
  std::vector<std::string> texts(const std::string& key) const {
    return fetch(key, ConfigValue::Kind::text_list).texts;
  }

  // Reject keys outside the supported set; typos must not pass silently.
  void restrict_to(const std::vector<std::string>& allowed) const {
    for (const auto& [key, val] : entries_) {
      bool ok = false;
      for (const std::string& a : allowed)
        if (a == key) {
          ok = true;
          break;
        }
      if (!ok)
        throw ConfigError("line " + std::to_string(val.line) + ": unknown config key `" + key +
                          "`");
    }
  }

  std::vector<std::string> keys() const {
    std::vector<std::string> out;
    for (const auto& [key, _] : entries_) out.push_back(key);
    return out;
  }

 private:
  const ConfigValue& fetch(const std::string& key, ConfigValue::Kind want) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError("missing config key `" + key + "`");
    if (it->second.kind != want) {
      static const char* names[] = {"number", "string", "boolean", "number array",
                                    "string array"};
      throw ConfigError("config key `" + key + "` must be a " +
                        names[static_cast<int>(want)]);
    }
    return it->second;
  }

  std::map<std::string, ConfigValue> entries_;
};

// 17 significant digits: enough to round-trip a double exactly, so emitted
// tables can be compared bit-for-bit across languages.
inline std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open output file: " + path);
  out << content;
  if (!out) throw NumericalError("failed writing " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace pwlab

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "curvedfield/errors.hpp"

namespace curvedfield::cli {

/// Invalid or inconsistent run configuration (exit code 2).
class config_error : public error {
 public:
  using error::error;
};

/// File could not be read or written (exit code 4).
class io_error : public error {
 public:
  using error::error;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline bool valid_key(std::string_view key) {
  if (key.empty() || key.front() == '.' || key.back() == '.') return false;
  return std::all_of(key.begin(), key.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '.';
  });
}

}  // namespace detail

/// Flat key = value configuration with dotted section prefixes. '#' starts a
/// comment. Every key must be read by the command, otherwise reject_unknown()
/// reports it.
class Config {
 public:
  static Config parse(std::string_view text, std::string source = "<config>") {
    Config c;
    c.source_ = std::move(source);
    std::istringstream in{std::string(text)};
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
      ++line;
      const auto hash = raw.find('#');
      const std::string body = detail::trim(std::string_view(raw).substr(0, hash));
      if (body.empty()) continue;
      const auto eq = body.find('=');
      if (eq == std::string::npos) {
        throw config_error(c.where(line) + ": expected 'key = value', got '" + body + "'");
      }
      const std::string key = detail::trim(std::string_view(body).substr(0, eq));
      const std::string value = detail::trim(std::string_view(body).substr(eq + 1));
      if (!detail::valid_key(key)) throw config_error(c.where(line) + ": malformed key '" + key + "'");
      if (c.entries_.count(key)) {
        throw config_error(c.where(line) + ": duplicate key " + key + " (first set on line " +
                           std::to_string(c.entries_.at(key).line) + ")");
      }
      c.entries_[key] = {value, line, false};
    }
    return c;
  }

  static Config load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot read config file '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse(text.str(), path);
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  /// Overrides or adds a value (used for command-line flags).
  void set(const std::string& key, std::string value) { entries_[key] = {std::move(value), 0, false}; }

  std::string text(const std::string& key) const { return entry(key).value; }
  std::string text_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? text(key) : fallback;
  }

  double number(const std::string& key) const { return to_number(key, entry(key).value); }
  double number_or(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

  long long integer(const std::string& key) const {
    const std::string& v = entry(key).value;
    long long out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) fail(key, "expected an integer, got '" + v + "'");
    return out;
  }
  long long integer_or(const std::string& key, long long fallback) const { return has(key) ? integer(key) : fallback; }

  /// Integer constrained to [lo, hi].
  long long integer_in(const std::string& key, long long fallback, long long lo, long long hi) const {
    const long long v = integer_or(key, fallback);
    if (v < lo || v > hi) {
      fail(key, "value " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    return v;
  }

  bool flag_or(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = text(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    fail(key, "expected true or false, got '" + v + "'");
  }

  /// Comma-separated list of numbers.
  std::vector<double> numbers(const std::string& key) const {
    const std::string v = entry(key).value;
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= v.size()) {
      const auto comma = v.find(',', start);
      const std::string item = detail::trim(std::string_view(v).substr(start, comma - start));
      if (item.empty()) fail(key, "empty list element in '" + v + "'");
      out.push_back(to_number(key, item));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return out;
  }

  /// One of a fixed set of words.
  std::string choice(const std::string& key, const std::string& fallback, std::initializer_list<const char*> allowed) const {
    const std::string v = text_or(key, fallback);
    for (const char* a : allowed)
      if (v == a) return v;
    std::string list;
    for (const char* a : allowed) list += std::string(list.empty() ? "" : "|") + a;
    fail(key, "expected one of " + list + ", got '" + v + "'");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& message) const {
    const auto it = entries_.find(key);
    const int line = it == entries_.end() ? 0 : it->second.line;
    throw config_error(where(line) + ": " + key + ": " + message);
  }

  /// Wraps a validation failure of a library object built from the keys under `section`.
  template <class F>
  auto validated(const std::string& section, F&& build) const -> decltype(build()) {
    try {
      return build();
    } catch (const config_error&) {
      throw;
    } catch (const domain_error& e) {
      throw config_error(source_ + ": " + section + ": " + e.what());
    }
  }

  void reject_unknown() const {
    for (const auto& [key, e] : entries_) {
      if (!e.used) throw config_error(where(e.line) + ": unknown key " + key);
    }
  }

  /// Canonical text of the keys read so far, sorted; the basis of the config hash.
  std::string canonical() const {
    std::string out;
    for (const auto& [key, e] : entries_)
      if (e.used) out += key + "=" + e.value + "\n";
    return out;
  }

  const std::string& source() const { return source_; }

 private:
  struct Entry {
    std::string value;
    int line = 0;
    mutable bool used = false;
  };

  const Entry& entry(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw config_error(source_ + ": missing required key " + key);
    it->second.used = true;
    return it->second;
  }

  double to_number(const std::string& key, const std::string& v) const {
    if (v == "inf" || v == "+inf" || v == "infinity") return HUGE_VAL;
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || std::isnan(out)) {
      fail(key, "expected a number, got '" + v + "'");
    }
    return out;
  }

  std::string where(int line) const { return line > 0 ? source_ + ":" + std::to_string(line) : source_; }

  std::string source_;
  std::map<std::string, Entry> entries_;
};

}  // namespace curvedfield::cli

#pragma once

#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace gbq {

/// Flat `dotted.key = value` text. Values are numbers (fractions such as
/// 1/40 allowed), bare or double-quoted strings, true/false, or bracketed
/// comma-separated lists. `#` starts a comment.
class Config {
 public:
  static Config parse(std::istream& is);
  static Config parse_string(const std::string& text);
  static Config load(const std::string& path);

  /// Applies `key=value`; errors are reported against the override text.
  void set_override(const std::string& assignment);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::optional<std::string>& fallback = {}) const;
  double get_double(const std::string& key, const std::optional<double>& fallback = {}) const;
  int get_int(const std::string& key, const std::optional<int>& fallback = {}) const;
  bool get_bool(const std::string& key, const std::optional<bool>& fallback = {}) const;
  std::vector<double> get_double_list(const std::string& key,
                                      const std::optional<std::vector<double>>& fallback = {}) const;
  std::vector<int> get_int_list(const std::string& key, const std::optional<std::vector<int>>& fallback = {}) const;
  std::vector<std::string> get_string_list(const std::string& key,
                                           const std::optional<std::vector<std::string>>& fallback = {}) const;

  /// Throws ConfigParseError for the first key no getter asked for.
  void reject_unused() const;

  /// Canonical `key = value` lines, sorted; the basis of the config hash.
  std::string canonical() const;

 private:
  struct Entry {
    std::string raw;
    int line = 0;
  };
  const Entry* find(const std::string& key) const;
  void assign(const std::string& text, int line);

  std::map<std::string, Entry> entries_;
  mutable std::set<std::string> used_;
};

/// Parses a number or a fraction a/b.
std::optional<double> parse_number(const std::string& s);

/// 64-bit FNV-1a of `text` as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

}  // namespace gbq

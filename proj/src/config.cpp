#include "gbq/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "gbq/errors.hpp"

namespace gbq {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

bool valid_key(const std::string& k) {
  if (k.empty() || k.front() == '.' || k.back() == '.') return false;
  for (char c : k)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-')) return false;
  return true;
}

// Strips a comment that is not inside quotes.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

double parse_plain(const std::string& s, bool& ok) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = b + s.size();
  if (b != e && *b == '+') ++b;
  const auto res = std::from_chars(b, e, v);
  ok = res.ec == std::errc() && res.ptr == e;
  return v;
}

}  // namespace

std::optional<double> parse_number(const std::string& text) {
  const std::string s = trim(text);
  if (s.empty()) return std::nullopt;
  const auto slash = s.find('/');
  bool ok = false;
  if (slash == std::string::npos) {
    const double v = parse_plain(s, ok);
    return ok ? std::optional<double>(v) : std::nullopt;
  }
  bool ok2 = false;
  const double a = parse_plain(trim(s.substr(0, slash)), ok);
  const double b = parse_plain(trim(s.substr(slash + 1)), ok2);
  if (!ok || !ok2 || b == 0.0) return std::nullopt;
  return a / b;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

void Config::assign(const std::string& text, int line) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw ConfigParseError(line, "", "expected 'key = value'");
  const std::string key = trim(text.substr(0, eq));
  const std::string value = trim(text.substr(eq + 1));
  if (!valid_key(key)) throw ConfigParseError(line, key, "invalid key '" + key + "'");
  if (value.empty()) throw ConfigParseError(line, key, "missing value for '" + key + "'");
  if (std::count(value.begin(), value.end(), '"') % 2) throw ConfigParseError(line, key, "unterminated string");
  if ((value.front() == '[') != (value.back() == ']')) throw ConfigParseError(line, key, "unbalanced brackets");
  entries_[key] = Entry{value, line};
}

Config Config::parse(std::istream& is) {
  Config c;
  std::string raw;
  int line = 0;
  std::set<std::string> seen;
  while (std::getline(is, raw)) {
    ++line;
    const std::string text = trim(strip_comment(raw));
    if (text.empty()) continue;
    c.assign(text, line);
    const std::string key = trim(text.substr(0, text.find('=')));
    if (!seen.insert(key).second) throw ConfigParseError(line, key, "duplicate key '" + key + "'");
  }
  return c;
}

Config Config::parse_string(const std::string& text) {
  std::istringstream is(text);
  return parse(is);
}

Config Config::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigParseError(0, "", "cannot read config file '" + path + "'");
  return parse(f);
}

void Config::set_override(const std::string& assignment) { assign(trim(assignment), 0); }

const Config::Entry* Config::find(const std::string& key) const {
  used_.insert(key);
  const auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

bool Config::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string Config::get_string(const std::string& key, const std::optional<std::string>& fallback) const {
  const Entry* e = find(key);
  if (!e) {
    if (fallback) return *fallback;
    throw ConfigParseError(0, key, "missing required key '" + key + "'");
  }
  if (e->raw.front() == '[') throw ConfigParseError(e->line, key, "expected a single value");
  return unquote(e->raw);
}

double Config::get_double(const std::string& key, const std::optional<double>& fallback) const {
  const Entry* e = find(key);
  if (!e) {
    if (fallback) return *fallback;
    throw ConfigParseError(0, key, "missing required key '" + key + "'");
  }
  const auto v = parse_number(e->raw);
  if (!v || !std::isfinite(*v)) throw ConfigParseError(e->line, key, "'" + e->raw + "' is not a number");
  return *v;
}

int Config::get_int(const std::string& key, const std::optional<int>& fallback) const {
  const Entry* e = find(key);
  if (!e) {
    if (fallback) return *fallback;
    throw ConfigParseError(0, key, "missing required key '" + key + "'");
  }
  const auto v = parse_number(e->raw);
  if (!v || *v != std::floor(*v) || std::abs(*v) > 1e9)
    throw ConfigParseError(e->line, key, "'" + e->raw + "' is not an integer");
  return static_cast<int>(*v);
}

bool Config::get_bool(const std::string& key, const std::optional<bool>& fallback) const {
  const Entry* e = find(key);
  if (!e) {
    if (fallback) return *fallback;
    throw ConfigParseError(0, key, "missing required key '" + key + "'");
  }
  if (e->raw == "true") return true;
  if (e->raw == "false") return false;
  throw ConfigParseError(e->line, key, "'" + e->raw + "' is not true/false");
}

namespace {

std::vector<std::string> split_list(const std::string& raw) {
  std::string body = raw;
  if (body.front() == '[') body = body.substr(1, body.size() - 2);
  std::vector<std::string> out;
  if (trim(body).empty()) return out;
  std::string cur;
  bool quoted = false;
  for (char ch : body) {
    if (ch == '"') quoted = !quoted;
    if (ch == ',' && !quoted) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(trim(cur));
  return out;
}

}  // namespace

std::vector<double> Config::get_double_list(const std::string& key,
                                            const std::optional<std::vector<double>>& fallback) const {
  const Entry* e = find(key);
  if (!e) {
    if (fallback) return *fallback;
    throw ConfigParseError(0, key, "missing required key '" + key + "'");
  }
  std::vector<double> out;
  for (const std::string& item : split_list(e->raw)) {
    const auto v = parse_number(item);
    if (!v || !std::isfinite(*v)) throw ConfigParseError(e->line, key, "list item '" + item + "' is not a number");
    out.push_back(*v);
  }
  return out;
}

std::vector<int> Config::get_int_list(const std::string& key, const std::optional<std::vector<int>>& fallback) const {
  const Entry* e = find(key);
  if (!e) {
    if (fallback) return *fallback;
    throw ConfigParseError(0, key, "missing required key '" + key + "'");
  }
  std::vector<int> out;
  for (const std::string& item : split_list(e->raw)) {
    const auto v = parse_number(item);
    if (!v || *v != std::floor(*v)) throw ConfigParseError(e->line, key, "list item '" + item + "' is not an integer");
    out.push_back(static_cast<int>(*v));
  }
  return out;
}

std::vector<std::string> Config::get_string_list(const std::string& key,
                                                 const std::optional<std::vector<std::string>>& fallback) const {
  const Entry* e = find(key);
  if (!e) {
    if (fallback) return *fallback;
    throw ConfigParseError(0, key, "missing required key '" + key + "'");
  }
  std::vector<std::string> out;
  for (const std::string& item : split_list(e->raw)) out.push_back(unquote(item));
  return out;
}

void Config::reject_unused() const {
  for (const auto& [key, e] : entries_)
    if (!used_.count(key)) throw ConfigParseError(e.line, key, "unknown key '" + key + "'");
}

std::string Config::canonical() const {
  std::string out;
  for (const auto& [key, e] : entries_) out += key + " = " + e.raw + "\n";
  return out;
}

}  // namespace gbq

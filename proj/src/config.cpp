#include "bfa/config.hpp"

#include "bfa/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace bfa::config {

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) return false;
  return k.front() != '.' && k.back() != '.';
}

[[noreturn]] void fail(int line, const std::string& what) {
  throw ConfigError("config line " + std::to_string(line) + ": " + what);
}

// Parses the value starting at `s`; returns it and the unparsed remainder.
std::pair<Value, std::string> parse_value(const std::string& s, int line) {
  if (s.empty()) fail(line, "missing value");
  if (s[0] == '"') {
    std::string out;
    for (std::size_t i = 1; i < s.size(); ++i) {
      char c = s[i];
      if (c == '"') return {out, s.substr(i + 1)};
      if (c == '\\') {
        if (++i >= s.size()) break;
        switch (s[i]) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        default: fail(line, std::string("unsupported escape \\") + s[i]);
        }
        continue;
      }
      out += c;
    }
    fail(line, "unterminated string");
  }
  if (s[0] == '\'') {
    auto close = s.find('\'', 1);
    if (close == std::string::npos) fail(line, "unterminated string");
    return {s.substr(1, close - 1), s.substr(close + 1)};
  }
  auto end = s.find_first_of(" \t#");
  auto word = s.substr(0, end);
  auto rest = end == std::string::npos ? std::string() : s.substr(end);
  if (word == "true") return {true, rest};
  if (word == "false") return {false, rest};
  std::string digits;
  for (char c : word)
    if (c != '_') digits += c;
  std::int64_t i = 0;
  auto [ip, iec] = std::from_chars(digits.data(), digits.data() + digits.size(), i);
  if (iec == std::errc{} && ip == digits.data() + digits.size()) return {i, rest};
  double d = 0;
  auto [dp, dec] = std::from_chars(digits.data(), digits.data() + digits.size(), d);
  if (dec == std::errc{} && dp == digits.data() + digits.size()) return {d, rest};
  fail(line, "cannot parse value '" + word + "'");
}

} // namespace

Document parse_toml(const std::string& text) {
  Document doc;
  std::string prefix;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    auto line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line[0] == '[') {
      auto close = line.find(']');
      if (close == std::string::npos) fail(line_no, "unterminated table header");
      auto rest = trim(line.substr(close + 1));
      if (!rest.empty() && rest[0] != '#') fail(line_no, "trailing characters after table header");
      auto name = trim(line.substr(1, close - 1));
      if (!valid_key(name)) fail(line_no, "bad table name '" + name + "'");
      prefix = name + ".";
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected key = value");
    auto key = trim(line.substr(0, eq));
    if (key.size() >= 2 && key.front() == '"' && key.back() == '"') key = key.substr(1, key.size() - 2);
    if (!valid_key(key)) fail(line_no, "bad key '" + key + "'");
    auto [value, rest] = parse_value(trim(line.substr(eq + 1)), line_no);
    rest = trim(rest);
    if (!rest.empty() && rest[0] != '#') fail(line_no, "trailing characters after value");
    auto full = prefix + key;
    if (doc.count(full)) fail(line_no, "duplicate key '" + full + "'");
    doc.emplace(std::move(full), std::move(value));
  }
  return doc;
}

Document load_toml(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_toml(buf.str());
}

} // namespace bfa::config

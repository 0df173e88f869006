#include "bfa/flipcore.hpp"

#include "bfa/error.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>

extern char** environ;

namespace bfa {

namespace {

bool is_identifier(const std::string& name) {
  if (name.empty()) return false;
  auto head = static_cast<unsigned char>(name[0]);
  if (!(std::isalpha(head) || head == '_')) return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    auto u = static_cast<unsigned char>(c);
    return u < 0x80 && (std::isalnum(u) || u == '_');
  });
}

std::optional<BranchId> parse_decimal(std::string_view text) {
  if (text.empty()) return std::nullopt;
  BranchId value = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size()) return std::nullopt;
  if (text.front() == '-') return std::nullopt;
  return value;
}

} // namespace

void FlipEnv::validate() const {
  if (!is_identifier(flip_var))
    throw ConfigError("invalid flip variable name '" + flip_var + "'");
  if (!is_identifier(coverage_var))
    throw ConfigError("invalid coverage variable name '" + coverage_var + "'");
}

FlipSelection FlipSelection::of(BranchId id) {
  FlipSelection s;
  if (id >= 1) s.selected_ = id;
  return s;
}

bool CoverageRecord::contains(BranchId id) const {
  return std::find(ids.begin(), ids.end(), id) != ids.end();
}

void CoverageSink::append(BranchId id) noexcept {
  try {
    std::lock_guard lock(mutex_);
    if (seen_.insert(id).second) order_.push_back(id);
  } catch (...) {
    failed_ = true;
  }
}

CoverageRecord CoverageSink::record() const {
  std::lock_guard lock(mutex_);
  return CoverageRecord{order_};
}

bool CoverageSink::flush_to(const std::filesystem::path& path) noexcept {
  try {
    std::string text;
    {
      std::lock_guard lock(mutex_);
      for (BranchId id : order_) {
        text += std::to_string(id);
        text += '\n';
      }
    }
    std::ofstream out(path, std::ios::app | std::ios::binary);
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("write failed");
    return true;
  } catch (...) {
    failed_ = true;
    return false;
  }
}

Environment current_environment() {
  Environment env;
  for (char** entry = environ; entry && *entry; ++entry) {
    std::string_view kv(*entry);
    auto eq = kv.find('=');
    if (eq == std::string_view::npos) continue;
    env.emplace(std::string(kv.substr(0, eq)), std::string(kv.substr(eq + 1)));
  }
  return env;
}

FlipSelection resolve_flip_env(const Environment& environment, const FlipEnv& names) {
  auto it = environment.find(names.flip_var);
  if (it == environment.end() || it->second.empty()) return FlipSelection::none();
  auto value = parse_decimal(it->second);
  if (!value)
    throw ConfigError(names.flip_var + "='" + it->second + "' is not a decimal branch id");
  return *value == 0 ? FlipSelection::none() : FlipSelection::of(*value);
}

CoverageRecord parse_coverage_log(const std::string& text) {
  CoverageRecord record;
  std::unordered_set<BranchId> seen;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto id = parse_decimal(line);
    if (!id || *id < 1)
      throw ParseError("coverage log: malformed id '" + line + "' at line " +
                           std::to_string(line_no),
                       line_no);
    if (seen.insert(*id).second) record.ids.push_back(*id);
  }
  return record;
}

CoverageRecord read_coverage_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "warning: coverage log " << path.string() << " not found; treating as empty\n";
    return {};
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_coverage_log(buf.str());
}

} // namespace bfa

#include "bfa/instrument.hpp"

#include "bfa/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

namespace bfa::instrument {

namespace fs = std::filesystem;

namespace {

bool is_word_char(char c) {
  auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || c == '_';
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

// Lexical walker over C source. Knows just enough C to skip comments,
// literals and directive lines.
class Scanner {
public:
  Scanner(std::string_view text, const std::string& file) : text_(text), file_(file) {
    line_starts_.push_back(0);
    for (std::size_t i = 0; i < text_.size(); ++i)
      if (text_[i] == '\n') line_starts_.push_back(i + 1);
  }

  int line_of(std::size_t offset) const {
    auto it = std::upper_bound(line_starts_.begin(), line_starts_.end(), offset);
    return static_cast<int>(it - line_starts_.begin());
  }

  int column_of(std::size_t offset) const {
    auto line = line_of(offset);
    return static_cast<int>(offset - line_starts_[line - 1]) + 1;
  }

  std::optional<std::size_t> offset_of(int line, int column) const {
    if (line < 1 || static_cast<std::size_t>(line) > line_starts_.size() || column < 1)
      return std::nullopt;
    auto off = line_starts_[line - 1] + static_cast<std::size_t>(column - 1);
    if (off >= text_.size()) return std::nullopt;
    return off;
  }

  bool starts_with(std::size_t i, std::string_view s) const { return text_.substr(i, s.size()) == s; }

  // Each skip_* takes the offset of the opening token and returns the offset
  // just past the construct.
  std::size_t skip_line_comment(std::size_t i) const {
    auto nl = text_.find('\n', i);
    return nl == std::string_view::npos ? text_.size() : nl;
  }

  std::size_t skip_block_comment(std::size_t i) const {
    auto end = text_.find("*/", i + 2);
    if (end == std::string_view::npos) fail(i, "unterminated block comment");
    return end + 2;
  }

  std::size_t skip_quoted(std::size_t i) const {
    char quote = text_[i];
    for (std::size_t j = i + 1; j < text_.size(); ++j) {
      char c = text_[j];
      if (c == '\\') {
        ++j;
        continue;
      }
      if (c == quote) return j + 1;
      if (c == '\n') break;
    }
    fail(i, quote == '"' ? "unterminated string literal" : "unterminated character literal");
  }

  // Directive runs to the first newline not preceded by a backslash.
  std::size_t skip_directive(std::size_t i) const {
    std::size_t j = i;
    while (j < text_.size()) {
      char c = text_[j];
      if (c == '\n') {
        if (j > i && text_[j - 1] == '\\') {
          ++j;
          continue;
        }
        return j;
      }
      if (starts_with(j, "//")) return skip_line_comment(j);
      if (starts_with(j, "/*")) {
        j = skip_block_comment(j);
        continue;
      }
      if (c == '"' || c == '\'') {
        j = skip_quoted(j);
        continue;
      }
      ++j;
    }
    return j;
  }

  // Skips whitespace and comments; returns the next significant offset.
  std::size_t skip_trivia(std::size_t i) const {
    while (i < text_.size()) {
      if (is_space(text_[i])) {
        ++i;
      } else if (starts_with(i, "//")) {
        i = skip_line_comment(i);
      } else if (starts_with(i, "/*")) {
        i = skip_block_comment(i);
      } else {
        break;
      }
    }
    return i;
  }

  struct Span {
    std::size_t open;
    std::size_t close;
  };

  // From just past an `if` keyword, finds the parenthesized condition.
  // Returns nullopt when the keyword is not followed by '('.
  std::optional<Span> condition_after(std::size_t after_keyword, std::size_t keyword) const {
    auto open = skip_trivia(after_keyword);
    if (open >= text_.size() || text_[open] != '(') return std::nullopt;
    int depth = 0;
    std::size_t j = open;
    while (j < text_.size()) {
      char c = text_[j];
      if (c == '(') {
        ++depth;
        ++j;
      } else if (c == ')') {
        if (--depth == 0) return Span{open, j};
        ++j;
      } else if (starts_with(j, "//")) {
        j = skip_line_comment(j);
      } else if (starts_with(j, "/*")) {
        j = skip_block_comment(j);
      } else if (c == '"' || c == '\'') {
        j = skip_quoted(j);
      } else {
        ++j;
      }
    }
    fail(keyword, "unbalanced parentheses in if condition");
  }

  template <typename OnIf>
  void walk(OnIf&& on_if) const {
    bool line_start = true;
    std::size_t i = 0;
    while (i < text_.size()) {
      char c = text_[i];
      if (c == '\n') {
        line_start = true;
        ++i;
        continue;
      }
      if (is_space(c)) {
        ++i;
        continue;
      }
      if (c == '#' && line_start) {
        i = skip_directive(i);
        continue;
      }
      line_start = false;
      if (starts_with(i, "//")) {
        i = skip_line_comment(i);
      } else if (starts_with(i, "/*")) {
        i = skip_block_comment(i);
      } else if (c == '"' || c == '\'') {
        i = skip_quoted(i);
      } else if (is_word_char(c)) {
        auto start = i;
        while (i < text_.size() && is_word_char(text_[i])) ++i;
        if (text_.substr(start, i - start) == "if") {
          if (auto span = condition_after(i, start)) {
            on_if(start, *span);
            i = span->close + 1;
          }
        }
      } else {
        ++i;
      }
    }
  }

  [[noreturn]] void fail(std::size_t offset, const std::string& what) const {
    throw InstrumentError(file_ + ":" + std::to_string(line_of(offset)) + ":" +
                          std::to_string(column_of(offset)) + ": " + what);
  }

private:
  std::string_view text_;
  std::string file_;
  std::vector<std::size_t> line_starts_;
};

constexpr std::string_view kGuardMarker = "__bfa_log(";

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InstrumentError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw InstrumentError("cannot write " + path.string());
}

} // namespace

ScanResult scan_branch_sites(std::string_view source, const std::string& file, BranchId start_id) {
  Scanner scanner(source, file);
  ScanResult result;
  result.next_id = start_id;
  scanner.walk([&](std::size_t keyword, Scanner::Span span) {
    BranchSite site;
    site.id = result.next_id++;
    site.file = file;
    site.line = scanner.line_of(keyword);
    site.column = scanner.column_of(keyword);
    site.condition = std::string(source.substr(span.open + 1, span.close - span.open - 1));
    result.sites.push_back(std::move(site));
  });
  return result;
}

std::string guard_expression(std::string_view condition, BranchId id) {
  auto n = std::to_string(id);
  std::string out;
  out.reserve(condition.size() + 64);
  out += "((";
  out += condition;
  out += ") ^ (__bfa_log(";
  out += n;
  out += ") && (__bfa_flip_id() == ";
  out += n;
  out += ")))";
  return out;
}

std::string rewrite_source(std::string_view source, std::span<const BranchSite> sites) {
  if (source.find(kGuardMarker) != std::string_view::npos)
    throw InstrumentError("source already instrumented (contains __bfa_log)");
  if (sites.empty()) return std::string(source);

  std::string file = sites.front().file;
  Scanner scanner(source, file);

  std::vector<const BranchSite*> ordered;
  for (const auto& s : sites) ordered.push_back(&s);
  std::sort(ordered.begin(), ordered.end(), [](auto* a, auto* b) {
    return std::tie(a->line, a->column) < std::tie(b->line, b->column);
  });

  std::string out;
  out.reserve(source.size() + sites.size() * 64);
  std::size_t copied = 0;
  for (const BranchSite* site : ordered) {
    auto mismatch = [&](const std::string& why) {
      return InstrumentError(file + ":" + std::to_string(site->line) + ":" +
                             std::to_string(site->column) + ": site " + std::to_string(site->id) +
                             " does not match source: " + why);
    };
    auto keyword = scanner.offset_of(site->line, site->column);
    if (!keyword || !scanner.starts_with(*keyword, "if")) throw mismatch("no 'if' keyword");
    if (*keyword < copied) throw mismatch("overlapping sites");
    auto span = scanner.condition_after(*keyword + 2, *keyword);
    if (!span) throw mismatch("no parenthesized condition");
    auto cond = source.substr(span->open + 1, span->close - span->open - 1);
    if (cond != site->condition) throw mismatch("condition text differs");

    out.append(source.substr(copied, span->open + 1 - copied));
    out += guard_expression(cond, site->id);
    copied = span->close;
  }
  out.append(source.substr(copied));
  return out;
}

const BranchSite* Manifest::find(BranchId id) const {
  for (const auto& s : sites)
    if (s.id == id) return &s;
  return nullptr;
}

std::string Manifest::to_json() const {
  nlohmann::ordered_json j;
  j["version"] = tool_version;
  j["flip_var"] = env.flip_var;
  j["coverage_var"] = env.coverage_var;
  j["shim"] = shim_file;
  auto& arr = j["sites"] = nlohmann::ordered_json::array();
  for (const auto& s : sites) {
    nlohmann::ordered_json site;
    site["id"] = s.id;
    site["file"] = s.file;
    site["line"] = s.line;
    site["col"] = s.column;
    site["cond"] = s.condition;
    arr.push_back(std::move(site));
  }
  return j.dump(2) + "\n";
}

Manifest Manifest::from_json(const std::string& text) {
  Manifest m;
  try {
    auto j = nlohmann::json::parse(text);
    m.tool_version = j.at("version").get<std::string>();
    m.env.flip_var = j.at("flip_var").get<std::string>();
    m.env.coverage_var = j.at("coverage_var").get<std::string>();
    m.shim_file = j.at("shim").get<std::string>();
    for (const auto& s : j.at("sites")) {
      BranchSite site;
      site.id = s.at("id").get<BranchId>();
      site.file = s.at("file").get<std::string>();
      site.line = s.at("line").get<int>();
      site.column = s.at("col").get<int>();
      site.condition = s.at("cond").get<std::string>();
      m.sites.push_back(std::move(site));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }
  for (std::size_t i = 0; i < m.sites.size(); ++i)
    if (m.sites[i].id != static_cast<BranchId>(i + 1))
      throw ParseError("manifest: site ids must be dense 1..n");
  return m;
}

Manifest Manifest::load(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read manifest " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  auto m = from_json(buf.str());
  m.instrumented_root = path.parent_path();
  return m;
}

void Manifest::save(const fs::path& path) const { write_file(path, to_json()); }

bool glob_match(std::string_view pattern, std::string_view path) {
  std::string re;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    char c = pattern[i];
    if (c == '*') {
      if (i + 1 < pattern.size() && pattern[i + 1] == '*') {
        if (i + 2 < pattern.size() && pattern[i + 2] == '/') {
          re += "(?:.*/)?";
          i += 2;
        } else {
          re += ".*";
          i += 1;
        }
      } else {
        re += "[^/]*";
      }
    } else if (c == '?') {
      re += "[^/]";
    } else if (std::string_view(".^$|()[]{}+\\").find(c) != std::string_view::npos) {
      re += '\\';
      re += c;
    } else {
      re += c;
    }
  }
  return std::regex_match(path.begin(), path.end(), std::regex(re));
}

std::string runtime_shim_header() {
  return "/* Generated by bfa instrument. */\n"
         "#ifndef BFA_RUNTIME_H\n"
         "#define BFA_RUNTIME_H\n"
         "int __bfa_log(long id);\n"
         "long __bfa_flip_id(void);\n"
         "#endif\n";
}

std::string runtime_shim_source(const FlipEnv& env) {
  env.validate();
  std::string s;
  s += "/* Generated by bfa instrument. Flip protocol runtime:\n";
  s += " *   " + env.flip_var + "=<id>    negates the condition of branch site <id>\n";
  s += " *   " + env.coverage_var + "=<path>  appends each evaluated site id to <path>\n";
  s += " */\n";
  s += R"(#include <stdio.h>
#include <stdlib.h>

int __bfa_log(long id);
long __bfa_flip_id(void);

static int bfa_flip_loaded = 0;
static long bfa_flip_value = 0;
static int bfa_cov_loaded = 0;
static FILE *bfa_cov_file = NULL;

long __bfa_flip_id(void)
{
  if (!bfa_flip_loaded) {
    const char *text = getenv("@FLIP@");
    bfa_flip_value = 0;
    if (text != NULL && *text != '\0') {
      char *end = NULL;
      long value = strtol(text, &end, 10);
      if (end != NULL && *end == '\0' && value > 0) {
        bfa_flip_value = value;
      }
    }
    bfa_flip_loaded = 1;
  }
  return bfa_flip_value;
}

int __bfa_log(long id)
{
  if (!bfa_cov_loaded) {
    const char *path = getenv("@COV@");
    if (path != NULL && *path != '\0') {
      bfa_cov_file = fopen(path, "a");
    }
    bfa_cov_loaded = 1;
  }
  if (bfa_cov_file != NULL) {
    fprintf(bfa_cov_file, "%ld\n", id);
    fflush(bfa_cov_file);
  }
  return 1;
}
)";
  auto replace = [&](const std::string& from, const std::string& to) {
    for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
      s.replace(pos, from.size(), to);
  };
  replace("@FLIP@", env.flip_var);
  replace("@COV@", env.coverage_var);
  return s;
}

fs::path emit_runtime_shim(const fs::path& dir, const FlipEnv& env) {
  auto source = runtime_shim_source(env);
  auto path = dir / kShimName;
  write_file(path, source);
  write_file(dir / kShimHeaderName, runtime_shim_header());
  return path;
}

Manifest instrument_tree(const fs::path& root, const std::vector<std::string>& include_globs,
                         const FlipEnv& env) {
  env.validate();
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw InstrumentError("root " + root.string() + " is not a directory");
  if (fs::exists(root / kBackupDir) || fs::exists(root / kManifestName))
    throw InstrumentError("tree at " + root.string() + " is already instrumented");

  std::vector<std::string> files;
  for (auto it = fs::recursive_directory_iterator(root); it != fs::recursive_directory_iterator(); ++it) {
    auto rel = fs::relative(it->path(), root).generic_string();
    if (it->is_directory() && rel.rfind(".bfa-", 0) == 0) {
      it.disable_recursion_pending();
      continue;
    }
    if (!it->is_regular_file()) continue;
    if (rel == kShimName || rel == kShimHeaderName) continue;
    for (const auto& g : include_globs) {
      if (glob_match(g, rel)) {
        files.push_back(rel);
        break;
      }
    }
  }
  if (files.empty()) throw InstrumentError("no files matched");
  std::sort(files.begin(), files.end());

  // Everything is scanned and rewritten in memory before the first write.
  Manifest manifest;
  manifest.env = env;
  manifest.instrumented_root = root;
  manifest.tool_version = BFA_VERSION;
  std::map<std::string, std::pair<std::string, std::string>> staged; // rel -> (original, rewritten)
  BranchId next = 1;
  for (const auto& rel : files) {
    auto original = read_file(root / rel);
    if (original.find(kGuardMarker) != std::string::npos)
      throw InstrumentError(rel + ": already instrumented (contains __bfa_log)");
    auto scan = scan_branch_sites(original, rel, next);
    next = scan.next_id;
    auto rewritten = rewrite_source(original, scan.sites);
    for (auto& s : scan.sites) manifest.sites.push_back(std::move(s));
    staged.emplace(rel, std::make_pair(std::move(original), std::move(rewritten)));
  }

  auto staging = root / ".bfa-staging";
  fs::remove_all(staging);
  try {
    for (const auto& [rel, texts] : staged) {
      auto backup = staging / "backup" / rel;
      auto output = staging / "out" / rel;
      fs::create_directories(backup.parent_path());
      fs::create_directories(output.parent_path());
      write_file(backup, texts.first);
      write_file(output, texts.second);
    }
    emit_runtime_shim(staging, env);
    write_file(staging / kManifestName, manifest.to_json());
  } catch (...) {
    fs::remove_all(staging, ec);
    throw;
  }

  fs::rename(staging / "backup", root / kBackupDir);
  for (const auto& [rel, texts] : staged) fs::rename(staging / "out" / rel, root / rel);
  fs::rename(staging / kShimName, root / kShimName);
  fs::rename(staging / kShimHeaderName, root / kShimHeaderName);
  fs::rename(staging / kManifestName, root / kManifestName);
  fs::remove_all(staging, ec);
  return manifest;
}

} // namespace bfa::instrument

#include "bfa/adapter.hpp"

#include "bfa/error.hpp"
#include "bfa/minidb/engine.hpp"
#include "bfa/subprocess.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>
#include <unistd.h>

namespace bfa {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kQueryPlaceholder = "{query_file}";

std::regex compile(const std::string& pattern, const char* what) {
  try {
    std::regex re(pattern);
    if (re.mark_count() < 1) throw ConfigError(std::string(what) + " needs one capture group");
    return re;
  } catch (const std::regex_error& e) {
    throw ConfigError(std::string(what) + " does not compile: " + e.what());
  }
}

std::optional<std::string> capture(const std::string& pattern, const std::string& text) {
  std::regex re(pattern);
  std::smatch m;
  if (!std::regex_search(text, m, re)) return std::nullopt;
  return m[1].str();
}

// Temp file holding the query text for the lifetime of one invocation.
class QueryFile {
public:
  explicit QueryFile(const std::string& query) {
    auto tmpl = (fs::temp_directory_path() / "bfa-query-XXXXXX.sql").string();
    int fd = ::mkstemps(tmpl.data(), 4);
    if (fd < 0) throw Error("cannot create query temp file");
    ::close(fd);
    path_ = tmpl;
    std::ofstream out(path_, std::ios::binary | std::ios::trunc);
    out << query;
  }
  ~QueryFile() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  QueryFile(const QueryFile&) = delete;
  QueryFile& operator=(const QueryFile&) = delete;
  const fs::path& path() const { return path_; }

private:
  fs::path path_;
};

void truncate_file(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot truncate coverage file " + path.string());
}

std::vector<std::string> output_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

} // namespace

void TargetConfig::validate() const {
  env.validate();
  if (kind == TargetKind::Minidb) {
    if (db_dir.empty()) throw ConfigError("minidb target needs a database directory");
    return;
  }
  for (const auto* cmd : {&explain_cmd, &execute_cmd})
    if (cmd->find(kQueryPlaceholder) == std::string::npos)
      throw ConfigError("command template '" + *cmd + "' lacks {query_file}");
  compile(cost_pattern, "cost_pattern");
  if (!digest_pattern.empty()) compile(digest_pattern, "digest_pattern");
  if (!rows_pattern.empty()) compile(rows_pattern, "rows_pattern");
  if (!work_pattern.empty()) compile(work_pattern, "work_pattern");
  if (!(timeout_s > 0)) throw ConfigError("timeout_s must be > 0");
}

MinidbTarget::MinidbTarget(const TargetConfig& config) : db_(minidb::load_database(config.db_dir)) {}

Measurement MinidbTarget::explain(const FlipSelection& selection, const std::string& query) {
  CoverageSink sink;
  minidb::FlipContext flips{selection, sink};
  auto started = std::chrono::steady_clock::now();
  try {
    auto plan = minidb::plan_query(minidb::parse_query(query), db_, flips);
    Measurement m;
    m.explain_text = minidb::render_plan(plan);
    m.est_cost = static_cast<double>(plan.total_cost());
    m.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    return m;
  } catch (const Error& e) {
    throw TargetError(std::string("minidb: ") + e.what(), 2, e.what());
  }
}

Measurement MinidbTarget::execute(const FlipSelection& selection, const std::string& query,
                                  const fs::path& coverage_path) {
  truncate_file(coverage_path);
  CoverageSink sink;
  minidb::FlipContext flips{selection, sink};
  minidb::QueryRun run;
  try {
    run = minidb::run_query(query, db_, flips);
  } catch (const Error& e) {
    throw TargetError(std::string("minidb: ") + e.what(), 2, e.what());
  }
  sink.flush_to(coverage_path);
  Measurement m;
  m.work_units = run.result.stats.work_units;
  m.wall_ms = run.result.stats.wall_ms;
  m.digest = run.digest;
  m.coverage = read_coverage_log(coverage_path);
  return m;
}

struct ExternalTarget::Invocation {
  ProcessResult process;
};

ExternalTarget::ExternalTarget(TargetConfig config) : config_(std::move(config)) { config_.validate(); }

ExternalTarget::Invocation ExternalTarget::run(const std::string& command, const FlipSelection& selection,
                                               const std::string& query, const fs::path* coverage_path) {
  QueryFile qf(query);
  ProcessSpec spec;
  for (auto word : split_command(command)) {
    for (auto pos = word.find(kQueryPlaceholder); pos != std::string::npos;
         pos = word.find(kQueryPlaceholder, pos))
      word.replace(pos, kQueryPlaceholder.size(), qf.path().string());
    spec.argv.push_back(std::move(word));
  }
  spec.set_env = config_.extra_env;
  if (auto id = selection.selected()) spec.set_env[config_.env.flip_var] = std::to_string(*id);
  else spec.unset_env.push_back(config_.env.flip_var);
  if (coverage_path) spec.set_env[config_.env.coverage_var] = coverage_path->string();
  else spec.unset_env.push_back(config_.env.coverage_var);
  spec.workdir = config_.workdir;
  spec.timeout_s = config_.timeout_s;

  Invocation inv{run_process(spec)};
  if (inv.process.timed_out) {
    if (coverage_path) {
      std::error_code ec;
      fs::remove(*coverage_path, ec);
    }
    throw Timeout("target timed out after " + std::to_string(config_.timeout_s) + " s");
  }
  if (inv.process.exit_code != 0)
    throw TargetError("target exited with code " + std::to_string(inv.process.exit_code), inv.process.exit_code,
                      inv.process.err);
  return inv;
}

Measurement ExternalTarget::explain(const FlipSelection& selection, const std::string& query) {
  auto inv = run(config_.explain_cmd, selection, query, nullptr);
  Measurement m;
  m.explain_text = inv.process.out;
  m.wall_ms = inv.process.wall_ms;
  auto cost = capture(config_.cost_pattern, inv.process.out);
  if (!cost) throw ParseError("cost_pattern did not match explain output");
  try {
    m.est_cost = std::stod(*cost);
  } catch (const std::exception&) {
    throw ParseError("captured cost '" + *cost + "' is not a number");
  }
  return m;
}

Measurement ExternalTarget::execute(const FlipSelection& selection, const std::string& query,
                                    const fs::path& coverage_path) {
  truncate_file(coverage_path);
  auto inv = run(config_.execute_cmd, selection, query, &coverage_path);
  Measurement m;
  m.wall_ms = inv.process.wall_ms;
  const auto& out = inv.process.out;
  if (!config_.digest_pattern.empty()) {
    auto hex = capture(config_.digest_pattern, out);
    auto value = hex ? minidb::parse_hex16(*hex) : std::nullopt;
    if (!value) throw ParseError("digest_pattern did not capture a hex digest");
    minidb::ResultDigest d;
    d.digest = *value;
    if (!config_.rows_pattern.empty()) {
      auto rows = capture(config_.rows_pattern, out);
      if (!rows) throw ParseError("rows_pattern did not match execute output");
      d.row_count = std::stoll(*rows);
    }
    m.digest = d;
  } else {
    m.digest = minidb::result_digest_lines(output_lines(out));
  }
  if (!config_.work_pattern.empty()) {
    auto work = capture(config_.work_pattern, out);
    if (!work) throw ParseError("work_pattern did not match execute output");
    m.work_units = std::stoll(*work);
  }
  m.coverage = read_coverage_log(coverage_path);
  return m;
}

std::unique_ptr<Target> make_target(const TargetConfig& config) {
  config.validate();
  if (config.kind == TargetKind::Minidb) return std::make_unique<MinidbTarget>(config);
  return std::make_unique<ExternalTarget>(config);
}

Measurement target_explain(const TargetConfig& config, const FlipSelection& selection, const std::string& query) {
  return make_target(config)->explain(selection, query);
}

Measurement target_execute(const TargetConfig& config, const FlipSelection& selection, const std::string& query,
                           const fs::path& coverage_path) {
  return make_target(config)->execute(selection, query, coverage_path);
}

} // namespace bfa

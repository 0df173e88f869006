#pragma once

#include "bfa/flipcore.hpp"
#include "bfa/minidb/database.hpp"
#include "bfa/minidb/digest.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace bfa {

/// One run's observations. Explain runs carry est_cost and no digest;
/// execute runs carry the digest.
struct Measurement {
  std::optional<double> est_cost;
  std::optional<std::int64_t> work_units;
  double wall_ms = 0.0;
  std::optional<minidb::ResultDigest> digest;
  CoverageRecord coverage;
  std::string explain_text;
};

enum class TargetKind { Minidb, External };

struct TargetConfig {
  TargetKind kind = TargetKind::Minidb;
  FlipEnv env;

  // minidb
  std::filesystem::path db_dir;

  // external; templates must contain {query_file}
  std::string explain_cmd;
  std::string execute_cmd;
  std::string cost_pattern = "Total cost: ([0-9.]+)";
  std::string digest_pattern;  // optional: capture a printed 16-hex-digit digest
  std::string rows_pattern;    // optional with digest_pattern: capture the row count
  std::string work_pattern;    // optional: capture printed work units
  std::filesystem::path workdir;
  Environment extra_env;
  double timeout_s = 60.0;
  bool restart_between_flips = true;

  /// Throws ConfigError on a broken template, pattern or timeout.
  void validate() const;
};

/// Uniform contract over a system under test.
class Target {
public:
  virtual ~Target() = default;
  virtual Measurement explain(const FlipSelection& selection, const std::string& query) = 0;
  /// Truncates `coverage_path`, runs the query with coverage logging into it
  /// and returns the executed ids alongside the execution measurements.
  virtual Measurement execute(const FlipSelection& selection, const std::string& query,
                              const std::filesystem::path& coverage_path) = 0;
};

/// In-process minidb; the database is loaded once.
class MinidbTarget final : public Target {
public:
  explicit MinidbTarget(const TargetConfig& config);
  explicit MinidbTarget(minidb::Database db) : db_(std::move(db)) {}

  Measurement explain(const FlipSelection& selection, const std::string& query) override;
  Measurement execute(const FlipSelection& selection, const std::string& query,
                      const std::filesystem::path& coverage_path) override;

  const minidb::Database& database() const { return db_; }

private:
  minidb::Database db_;
};

/// Any executable driven through command templates. The query reaches the
/// child as a temp file path substituted for `{query_file}`.
class ExternalTarget final : public Target {
public:
  explicit ExternalTarget(TargetConfig config);

  Measurement explain(const FlipSelection& selection, const std::string& query) override;
  Measurement execute(const FlipSelection& selection, const std::string& query,
                      const std::filesystem::path& coverage_path) override;

private:
  struct Invocation;
  Invocation run(const std::string& command, const FlipSelection& selection, const std::string& query,
                 const std::filesystem::path* coverage_path);

  TargetConfig config_;
};

std::unique_ptr<Target> make_target(const TargetConfig& config);

Measurement target_explain(const TargetConfig& config, const FlipSelection& selection, const std::string& query);
Measurement target_execute(const TargetConfig& config, const FlipSelection& selection, const std::string& query,
                           const std::filesystem::path& coverage_path);

} // namespace bfa

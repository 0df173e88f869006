#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

namespace bfa {

using BranchId = std::int64_t;
using Environment = std::map<std::string, std::string>;

/// Names of the two environment variables that make up the run-time flip
/// protocol.
struct FlipEnv {
  std::string flip_var = "BFA_FLIP";
  std::string coverage_var = "BFA_COVERAGE_FILE";

  /// Throws ConfigError unless both names are [A-Za-z_][A-Za-z0-9_]*.
  void validate() const;
};

/// The single branch flipped for one run, or none. Fixed for the lifetime
/// of a run.
class FlipSelection {
public:
  FlipSelection() = default;
  static FlipSelection none() { return {}; }
  static FlipSelection of(BranchId id);

  bool has_value() const { return selected_.has_value(); }
  std::optional<BranchId> selected() const { return selected_; }
  bool matches(BranchId id) const { return selected_ && *selected_ == id; }

  friend bool operator==(const FlipSelection&, const FlipSelection&) = default;

private:
  std::optional<BranchId> selected_;
};

/// Executed branch ids, unique, in first-occurrence order.
struct CoverageRecord {
  std::vector<BranchId> ids;

  bool contains(BranchId id) const;
  friend bool operator==(const CoverageRecord&, const CoverageRecord&) = default;
};

/// In-memory coverage sink shared by every flip point of a run. Appends are
/// thread safe; ordering across threads is arrival order.
class CoverageSink {
public:
  void append(BranchId id) noexcept;
  CoverageRecord record() const;

  /// Appends the buffered ids to `path`, one decimal id per line. Returns
  /// false on I/O failure; failed() stays set afterwards.
  bool flush_to(const std::filesystem::path& path) noexcept;
  bool failed() const { return failed_; }

private:
  mutable std::mutex mutex_;
  std::vector<BranchId> order_;
  std::unordered_set<BranchId> seen_;
  bool failed_ = false;
};

Environment current_environment();

/// Parses the flip variable. Unset, empty and "0" all mean no flip; anything
/// other than a positive decimal integer is a ConfigError.
FlipSelection resolve_flip_env(const Environment& environment, const FlipEnv& names = {});

/// The flip primitive: records `id` as executed and returns
/// condition XOR (selection == id).
inline bool flip_point(BranchId id, bool condition, const FlipSelection& selection,
                       CoverageSink& coverage) noexcept {
  coverage.append(id);
  return condition != selection.matches(id);
}

/// Reads a newline-delimited id log. A missing file yields an empty record
/// (with a warning on stderr); a malformed line throws ParseError.
CoverageRecord read_coverage_log(const std::filesystem::path& path);
CoverageRecord parse_coverage_log(const std::string& text);

} // namespace bfa

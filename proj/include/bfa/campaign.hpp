#pragma once

#include "bfa/adapter.hpp"
#include "bfa/instrument.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace bfa {

enum class Metric { WorkUnits, WallMs };

struct CampaignConfig {
  TargetConfig target;
  std::filesystem::path workload_dir;
  std::filesystem::path validation_dir;
  std::optional<std::filesystem::path> manifest_path;
  bool cost_gate = true;
  Metric metric = Metric::WorkUnits;
  int repeats = 10;
  double gap_threshold = 0.10;
  std::optional<std::filesystem::path> plan_rules;

  void validate() const;
  /// Reads the TOML config; relative paths resolve against the file's
  /// directory.
  static CampaignConfig load(const std::filesystem::path& path);
};

enum class VerdictKind { Issue, NoGain, FunctionalityAltering, Error };
enum class ErrorKind { Target, Parse, Timeout, Nondeterministic };

const char* verdict_name(VerdictKind v);
const char* error_kind_name(ErrorKind k);

struct ValidationVerdict {
  bool pass = true;
  std::string failing_query; // set when !pass
  std::string reason;

  static ValidationVerdict passed() { return {}; }
  static ValidationVerdict failed(std::string query, std::string reason) { return {false, std::move(query), std::move(reason)}; }
};

struct Decision {
  VerdictKind verdict = VerdictKind::NoGain;
  std::optional<double> ratio; // baseline metric / flipped metric; +inf allowed
};

struct FlipOutcome {
  std::string query_id;
  std::string query_text;
  BranchId flip_id = 0;
  Measurement baseline;
  Measurement flipped;
  bool cost_gated_out = false;
  VerdictKind verdict = VerdictKind::NoGain;
  std::optional<ErrorKind> error;
  std::string detail;
  std::optional<double> ratio;
  std::string failing_query;
};

struct QueryReport {
  std::string query_id;
  std::string query_text;
  std::optional<Measurement> baseline;
  std::string skipped_reason; // non-empty when the baseline failed
  std::vector<BranchId> evaluated_flips;
};

struct CampaignResult {
  std::vector<QueryReport> queries;
  std::vector<FlipOutcome> outcomes;
  std::map<BranchId, ValidationVerdict> validation;
  std::optional<std::size_t> manifest_size;
};

/// Metric value of a measurement (work units or wall ms).
std::optional<double> metric_value(const Measurement& m, Metric metric);

/// Runs the query `repeats` times. wall_ms is the lower median; work units
/// and digests must agree across runs.
Measurement measure_with_repeats(Target& target, const FlipSelection& selection, const std::string& query,
                                 int repeats, Metric metric, const std::filesystem::path& coverage_path);

/// Lower median: the smaller middle element for even sizes.
double lower_median(std::vector<double> values);

Decision decide_verdict(const Measurement& baseline, const Measurement& flipped, const CampaignConfig& config,
                        const ValidationVerdict& validation);

struct WorkloadQuery {
  std::string id;
  std::string text;
};

/// `<dir>/queries/*.sql` (or `<dir>/*.sql` when there is no queries/
/// subdirectory), in lexicographic file order.
std::vector<WorkloadQuery> load_queries(const std::filesystem::path& dir);

/// Differential validation of one flip over a query suite. Baseline digests
/// are computed once and reused across flips.
class FunctionalityValidator {
public:
  FunctionalityValidator(Target& target, std::vector<WorkloadQuery> suite, std::filesystem::path scratch);

  ValidationVerdict validate(BranchId flip_id);
  std::size_t size() const { return suite_.size(); }

private:
  Target& target_;
  std::vector<WorkloadQuery> suite_;
  std::filesystem::path scratch_;
  std::optional<std::vector<std::optional<minidb::ResultDigest>>> baseline_;
};

ValidationVerdict validate_functionality(Target& target, BranchId flip_id, const std::filesystem::path& validation_dir);

struct PlanRule {
  std::string parent;
  std::string requires_child;
};

struct PlanViolation {
  int line = 0; // 1-based line of the offending node in the explain text
  PlanRule rule;
};

std::vector<PlanRule> parse_plan_rules(const std::string& text);
std::vector<PlanViolation> check_plan_invariants(const std::string& explain_text, const std::vector<PlanRule>& rules);
std::vector<PlanViolation> check_plan_invariants(const std::string& explain_text,
                                                 const std::filesystem::path& rules_file);

CampaignResult run_campaign(const CampaignConfig& config);
CampaignResult run_campaign(const CampaignConfig& config, Target& target);

/// outcomes.json content.
std::string outcomes_json(const CampaignResult& result, const CampaignConfig& config);

} // namespace bfa

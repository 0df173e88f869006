#pragma once

#include "bfa/campaign.hpp"
#include "bfa/instrument.hpp"

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace bfa::report {

struct Issue {
  BranchId flip_id = 0;
  std::optional<instrument::BranchSite> site;
  std::string query_id; // exemplar: highest ratio, ties by query id
  std::string query_text;
  double ratio = 0.0;
  std::optional<double> baseline_metric;
  std::optional<double> flipped_metric;
  std::string baseline_explain;
  std::string flipped_explain;
  int affected_count = 0; // other queries improved past the threshold by the same flip
  std::vector<std::string> affected_queries;
};

/// Groups issue outcomes by flip id, sorted by ratio descending, ties by
/// ascending flip id.
std::vector<Issue> build_issues(const std::vector<FlipOutcome>& outcomes, const instrument::Manifest* manifest,
                                double gap_threshold, Metric metric = Metric::WorkUnits);

struct CoverageStats {
  std::set<BranchId> baseline_ids;
  std::set<BranchId> union_flip_ids;
  std::optional<std::size_t> manifest_size;
  double increase_pct = 0.0;
};

CoverageStats coverage_stats(const std::vector<CoverageRecord>& baseline, const std::vector<CoverageRecord>& flipped,
                             std::optional<std::size_t> manifest_size);
/// Baseline coverage of every query plus every executed flipped run.
CoverageStats coverage_stats(const CampaignResult& result);

std::string format_ratio(double ratio);

std::string render_text(const std::vector<Issue>& issues, const CoverageStats& stats, const CampaignConfig& config,
                        const CampaignResult* result = nullptr);
std::string issues_json(const std::vector<Issue>& issues, const CampaignConfig& config);
std::string coverage_json(const CoverageStats& stats);

/// Writes report.txt and issues.json into `out_dir`.
void render_report(const std::vector<Issue>& issues, const CoverageStats& stats, const CampaignConfig& config,
                   const std::filesystem::path& out_dir, const CampaignResult* result = nullptr);

/// Writes outcomes.json, issues.json, report.txt and coverage.json; returns
/// the issues.
std::vector<Issue> write_campaign_outputs(const CampaignResult& result, const CampaignConfig& config,
                                          const std::filesystem::path& out_dir);

} // namespace bfa::report

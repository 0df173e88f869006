#include "bfa/report.hpp"

#include "bfa/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace bfa::report {

namespace fs = std::filesystem;

std::vector<Issue> build_issues(const std::vector<FlipOutcome>& outcomes, const instrument::Manifest* manifest,
                                double gap_threshold, Metric metric) {
  std::map<BranchId, const FlipOutcome*> exemplar;
  for (const auto& o : outcomes) {
    if (o.verdict != VerdictKind::Issue || !o.ratio) continue;
    auto& best = exemplar[o.flip_id];
    if (!best || *o.ratio > *best->ratio || (*o.ratio == *best->ratio && o.query_id < best->query_id)) best = &o;
  }

  std::vector<Issue> issues;
  for (const auto& [id, o] : exemplar) {
    Issue issue;
    issue.flip_id = id;
    if (manifest)
      if (const auto* site = manifest->find(id)) issue.site = *site;
    issue.query_id = o->query_id;
    issue.query_text = o->query_text;
    issue.ratio = *o->ratio;
    issue.baseline_metric = metric_value(o->baseline, metric);
    issue.flipped_metric = metric_value(o->flipped, metric);
    issue.baseline_explain = o->baseline.explain_text;
    issue.flipped_explain = o->flipped.explain_text;
    for (const auto& other : outcomes) {
      if (other.flip_id != id || other.query_id == o->query_id || !other.ratio) continue;
      if (*other.ratio >= 1.0 + gap_threshold) issue.affected_queries.push_back(other.query_id);
    }
    std::sort(issue.affected_queries.begin(), issue.affected_queries.end());
    issue.affected_queries.erase(std::unique(issue.affected_queries.begin(), issue.affected_queries.end()),
                                 issue.affected_queries.end());
    issue.affected_count = static_cast<int>(issue.affected_queries.size());
    issues.push_back(std::move(issue));
  }
  std::stable_sort(issues.begin(), issues.end(), [](const Issue& a, const Issue& b) {
    if (a.ratio != b.ratio) return a.ratio > b.ratio;
    return a.flip_id < b.flip_id;
  });
  return issues;
}

CoverageStats coverage_stats(const std::vector<CoverageRecord>& baseline, const std::vector<CoverageRecord>& flipped,
                             std::optional<std::size_t> manifest_size) {
  CoverageStats s;
  s.manifest_size = manifest_size;
  for (const auto& r : baseline) s.baseline_ids.insert(r.ids.begin(), r.ids.end());
  s.union_flip_ids = s.baseline_ids;
  for (const auto& r : flipped) s.union_flip_ids.insert(r.ids.begin(), r.ids.end());
  auto base = static_cast<double>(s.baseline_ids.size());
  auto grown = static_cast<double>(s.union_flip_ids.size()) - base;
  s.increase_pct = 100.0 * grown / std::max(1.0, base);
  return s;
}

CoverageStats coverage_stats(const CampaignResult& result) {
  std::vector<CoverageRecord> baseline, flipped;
  for (const auto& q : result.queries)
    if (q.baseline) baseline.push_back(q.baseline->coverage);
  for (const auto& o : result.outcomes)
    if (!o.cost_gated_out && o.flipped.digest) flipped.push_back(o.flipped.coverage);
  return coverage_stats(baseline, flipped, result.manifest_size);
}

std::string format_ratio(double ratio) {
  if (std::isinf(ratio)) return "inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f", ratio);
  return buf;
}

namespace {

std::string metric_name(Metric m) { return m == Metric::WorkUnits ? "work_units" : "wall_ms"; }

std::string format_metric(const std::optional<double>& v, Metric m) {
  if (!v) return "n/a";
  char buf[64];
  if (m == Metric::WorkUnits) std::snprintf(buf, sizeof buf, "%.0f", *v);
  else std::snprintf(buf, sizeof buf, "%.3f", *v);
  return buf;
}

std::string site_text(const Issue& issue) {
  if (!issue.site) return "flip-point " + std::to_string(issue.flip_id) + " (built-in)";
  return "flip " + std::to_string(issue.flip_id) + " at " + issue.site->file + ":" + std::to_string(issue.site->line);
}

std::string indent(const std::string& text, const std::string& pad) {
  std::string out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out += pad + line + "\n";
  return out;
}

std::string id_list(const std::set<BranchId>& ids) {
  std::string s = "[";
  bool first = true;
  for (auto id : ids) {
    if (!first) s += ", ";
    s += std::to_string(id);
    first = false;
  }
  return s + "]";
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error("cannot write " + path.string());
}

nlohmann::ordered_json json_ratio(double r) {
  if (std::isinf(r)) return "inf";
  return r;
}

nlohmann::ordered_json json_opt(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

} // namespace

std::string render_text(const std::vector<Issue>& issues, const CoverageStats& stats, const CampaignConfig& config,
                        const CampaignResult* result) {
  std::ostringstream out;
  out << "Branch flip analysis report\n";
  out << "metric: " << metric_name(config.metric) << "  threshold: " << format_ratio(100.0 * config.gap_threshold)
      << "%  repeats: " << config.repeats << "  cost gate: " << (config.cost_gate ? "on" : "off") << "\n";
  if (result) {
    std::map<VerdictKind, int> counts;
    int gated = 0;
    for (const auto& o : result->outcomes) {
      ++counts[o.verdict];
      gated += o.cost_gated_out ? 1 : 0;
    }
    int skipped = 0;
    for (const auto& q : result->queries) skipped += q.baseline ? 0 : 1;
    out << "queries: " << result->queries.size() << " (" << skipped << " skipped)  flips evaluated: "
        << result->outcomes.size() << " (" << counts[VerdictKind::Issue] << " issue, " << counts[VerdictKind::NoGain]
        << " no_gain, " << counts[VerdictKind::FunctionalityAltering] << " functionality_altering, "
        << counts[VerdictKind::Error] << " error; " << gated << " cost-gated)\n";
    for (const auto& q : result->queries)
      if (!q.baseline) out << "skipped " << q.query_id << ": " << q.skipped_reason << "\n";
  }
  out << "\n" << issues.size() << (issues.size() == 1 ? " issue" : " issues") << " found\n";

  int n = 0;
  for (const auto& issue : issues) {
    out << "\nIssue " << ++n << ": " << site_text(issue) << "\n";
    if (issue.site) out << "  condition: " << issue.site->condition << "\n";
    out << "  ratio: " << format_ratio(issue.ratio) << "x (" << metric_name(config.metric) << " "
        << format_metric(issue.baseline_metric, config.metric) << " -> "
        << format_metric(issue.flipped_metric, config.metric) << ")\n";
    out << "  exemplar query: " << issue.query_id << "\n" << indent(issue.query_text, "    ");
    out << "  affected queries: " << issue.affected_count;
    if (!issue.affected_queries.empty()) {
      out << " (";
      for (std::size_t i = 0; i < issue.affected_queries.size(); ++i)
        out << (i ? ", " : "") << issue.affected_queries[i];
      out << ")";
    }
    out << "\n  baseline plan:\n" << indent(issue.baseline_explain, "    ");
    out << "  flipped plan:\n" << indent(issue.flipped_explain, "    ");
  }

  out << "\nCoverage\n";
  out << "  baseline branches: " << stats.baseline_ids.size() << " " << id_list(stats.baseline_ids) << "\n";
  out << "  with flips: " << stats.union_flip_ids.size() << " " << id_list(stats.union_flip_ids) << "\n";
  out << "  increase: " << format_ratio(stats.increase_pct) << "%\n";
  if (stats.manifest_size) out << "  instrumented branches: " << *stats.manifest_size << "\n";
  return out.str();
}

std::string issues_json(const std::vector<Issue>& issues, const CampaignConfig& config) {
  nlohmann::ordered_json j;
  j["metric"] = metric_name(config.metric);
  j["gap_threshold"] = config.gap_threshold;
  j["issue_count"] = issues.size();
  auto& arr = j["issues"] = nlohmann::ordered_json::array();
  for (const auto& i : issues) {
    nlohmann::ordered_json e;
    e["flip_id"] = i.flip_id;
    if (i.site) {
      e["site"] = {{"file", i.site->file}, {"line", i.site->line}, {"col", i.site->column}, {"cond", i.site->condition}};
    } else {
      e["site"] = nullptr;
    }
    e["query_id"] = i.query_id;
    e["query"] = i.query_text;
    e["ratio"] = json_ratio(i.ratio);
    e["baseline_metric"] = json_opt(i.baseline_metric);
    e["flipped_metric"] = json_opt(i.flipped_metric);
    e["affected_count"] = i.affected_count;
    e["affected_queries"] = i.affected_queries;
    e["baseline_explain"] = i.baseline_explain;
    e["flipped_explain"] = i.flipped_explain;
    arr.push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

std::string coverage_json(const CoverageStats& stats) {
  nlohmann::ordered_json j;
  j["baseline_ids"] = stats.baseline_ids;
  j["union_flip_ids"] = stats.union_flip_ids;
  j["manifest_size"] = stats.manifest_size ? nlohmann::ordered_json(*stats.manifest_size)
                                           : nlohmann::ordered_json(nullptr);
  j["increase_pct"] = stats.increase_pct;
  return j.dump(2) + "\n";
}

void render_report(const std::vector<Issue>& issues, const CoverageStats& stats, const CampaignConfig& config,
                   const fs::path& out_dir, const CampaignResult* result) {
  fs::create_directories(out_dir);
  write_text(out_dir / "report.txt", render_text(issues, stats, config, result));
  write_text(out_dir / "issues.json", issues_json(issues, config));
}

std::vector<Issue> write_campaign_outputs(const CampaignResult& result, const CampaignConfig& config,
                                          const fs::path& out_dir) {
  std::optional<instrument::Manifest> manifest;
  if (config.manifest_path) manifest = instrument::Manifest::load(*config.manifest_path);
  auto issues = build_issues(result.outcomes, manifest ? &*manifest : nullptr, config.gap_threshold, config.metric);
  auto stats = coverage_stats(result);
  fs::create_directories(out_dir);
  write_text(out_dir / "outcomes.json", outcomes_json(result, config));
  write_text(out_dir / "coverage.json", coverage_json(stats));
  render_report(issues, stats, config, out_dir, &result);
  return issues;
}

} // namespace bfa::report

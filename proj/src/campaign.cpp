#include "bfa/campaign.hpp"

#include "bfa/config.hpp"
#include "bfa/error.hpp"
#include "bfa/minidb/plan.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>
#include <unistd.h>

namespace bfa {

namespace fs = std::filesystem;

const char* verdict_name(VerdictKind v) {
  switch (v) {
  case VerdictKind::Issue: return "issue";
  case VerdictKind::NoGain: return "no_gain";
  case VerdictKind::FunctionalityAltering: return "functionality_altering";
  case VerdictKind::Error: return "error";
  }
  return "?";
}

const char* error_kind_name(ErrorKind k) {
  switch (k) {
  case ErrorKind::Target: return "target";
  case ErrorKind::Parse: return "parse";
  case ErrorKind::Timeout: return "timeout";
  case ErrorKind::Nondeterministic: return "nondeterministic";
  }
  return "?";
}

void CampaignConfig::validate() const {
  target.validate();
  if (repeats < 1) throw ConfigError("repeats must be >= 1");
  if (!(gap_threshold > 0 && gap_threshold < 1)) throw ConfigError("gap_threshold must be in (0, 1)");
  if (workload_dir.empty()) throw ConfigError("workload_dir is required");
}

namespace {

struct Reader {
  config::Document doc;
  fs::path base;
  std::set<std::string> used;

  template <typename T>
  std::optional<T> get(const std::string& key) {
    auto it = doc.find(key);
    if (it == doc.end()) return std::nullopt;
    used.insert(key);
    if constexpr (std::is_same_v<T, double>) {
      if (auto* i = std::get_if<std::int64_t>(&it->second)) return static_cast<double>(*i);
    }
    if (auto* v = std::get_if<T>(&it->second)) return *v;
    throw ConfigError("config key '" + key + "' has the wrong type");
  }

  std::optional<fs::path> path(const std::string& key) {
    auto s = get<std::string>(key);
    if (!s) return std::nullopt;
    fs::path p(*s);
    return p.is_absolute() ? p : base / p;
  }
};

} // namespace

CampaignConfig CampaignConfig::load(const fs::path& file) {
  Reader r{config::load_toml(file), file.parent_path(), {}};
  CampaignConfig c;
  if (auto v = r.path("workload_dir")) c.workload_dir = *v;
  if (auto v = r.path("validation_dir")) c.validation_dir = *v;
  c.manifest_path = r.path("manifest");
  c.plan_rules = r.path("plan_rules");
  if (auto v = r.get<bool>("cost_gate")) c.cost_gate = *v;
  if (auto v = r.get<std::string>("metric")) {
    if (*v == "work_units") c.metric = Metric::WorkUnits;
    else if (*v == "wall_ms") c.metric = Metric::WallMs;
    else throw ConfigError("metric must be work_units or wall_ms");
  }
  if (auto v = r.get<std::int64_t>("repeats")) c.repeats = static_cast<int>(*v);
  if (auto v = r.get<double>("gap_threshold")) c.gap_threshold = *v;

  auto& t = c.target;
  auto kind = r.get<std::string>("target.kind").value_or("minidb");
  if (kind == "minidb") t.kind = TargetKind::Minidb;
  else if (kind == "external") t.kind = TargetKind::External;
  else throw ConfigError("target.kind must be minidb or external");
  if (auto v = r.path("target.db")) t.db_dir = *v;
  if (auto v = r.get<std::string>("target.explain_cmd")) t.explain_cmd = *v;
  if (auto v = r.get<std::string>("target.execute_cmd")) t.execute_cmd = *v;
  if (auto v = r.get<std::string>("target.cost_pattern")) t.cost_pattern = *v;
  if (auto v = r.get<std::string>("target.digest_pattern")) t.digest_pattern = *v;
  if (auto v = r.get<std::string>("target.rows_pattern")) t.rows_pattern = *v;
  if (auto v = r.get<std::string>("target.work_pattern")) t.work_pattern = *v;
  if (auto v = r.path("target.workdir")) t.workdir = *v;
  if (auto v = r.get<double>("target.timeout_s")) t.timeout_s = *v;
  if (auto v = r.get<bool>("target.restart_between_flips")) t.restart_between_flips = *v;
  if (auto v = r.get<std::string>("target.flip_var")) t.env.flip_var = *v;
  if (auto v = r.get<std::string>("target.coverage_var")) t.env.coverage_var = *v;
  const std::string env_prefix = "target.extra_env.";
  for (const auto& [key, value] : r.doc) {
    if (key.rfind(env_prefix, 0) != 0) continue;
    auto s = std::get_if<std::string>(&value);
    if (!s) throw ConfigError("extra_env values must be strings");
    t.extra_env[key.substr(env_prefix.size())] = *s;
    r.used.insert(key);
  }
  for (const auto& [key, value] : r.doc)
    if (!r.used.count(key)) throw ConfigError("unknown config key '" + key + "'");
  c.validate();
  return c;
}

std::optional<double> metric_value(const Measurement& m, Metric metric) {
  if (metric == Metric::WallMs) return m.wall_ms;
  if (m.work_units) return static_cast<double>(*m.work_units);
  return std::nullopt;
}

double lower_median(std::vector<double> values) {
  if (values.empty()) throw Error("median of empty sample");
  std::sort(values.begin(), values.end());
  return values[(values.size() - 1) / 2];
}

Measurement measure_with_repeats(Target& target, const FlipSelection& selection, const std::string& query,
                                 int repeats, Metric metric, const fs::path& coverage_path) {
  if (repeats < 1) throw ConfigError("repeats must be >= 1");
  Measurement first;
  std::vector<double> walls;
  for (int i = 0; i < repeats; ++i) {
    auto m = target.execute(selection, query, coverage_path);
    walls.push_back(m.wall_ms);
    if (i == 0) {
      first = std::move(m);
      continue;
    }
    if (m.digest != first.digest)
      throw NondeterministicTarget("result digest changed between repeats 1 and " + std::to_string(i + 1));
    if (metric == Metric::WorkUnits && m.work_units != first.work_units)
      throw NondeterministicTarget("work units changed between repeats 1 and " + std::to_string(i + 1));
  }
  first.wall_ms = lower_median(std::move(walls));
  return first;
}

Decision decide_verdict(const Measurement& baseline, const Measurement& flipped, const CampaignConfig& config,
                        const ValidationVerdict& validation) {
  Decision d;
  auto b = metric_value(baseline, config.metric);
  auto f = metric_value(flipped, config.metric);
  if (b && f) {
    if (*f == 0.0) d.ratio = *b > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    else d.ratio = *b / *f;
  }
  if (!validation.pass) {
    d.verdict = VerdictKind::FunctionalityAltering;
  } else if (d.ratio && *d.ratio >= 1.0 + config.gap_threshold) {
    d.verdict = VerdictKind::Issue;
  } else {
    d.verdict = VerdictKind::NoGain;
  }
  return d;
}

std::vector<WorkloadQuery> load_queries(const fs::path& dir) {
  std::vector<WorkloadQuery> out;
  std::error_code ec;
  if (dir.empty() || !fs::is_directory(dir, ec)) return out;
  auto qdir = fs::is_directory(dir / "queries", ec) ? dir / "queries" : dir;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(qdir))
    if (e.is_regular_file() && e.path().extension() == ".sql") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    auto text = buf.str();
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.pop_back();
    out.push_back({f.stem().string(), std::move(text)});
  }
  return out;
}

namespace {

class ScratchDir {
public:
  ScratchDir() {
    auto tmpl = (fs::temp_directory_path() / "bfa-campaign-XXXXXX").string();
    if (!::mkdtemp(tmpl.data())) throw Error("cannot create scratch directory");
    path_ = tmpl;
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
  const fs::path& path() const { return path_; }

private:
  fs::path path_;
};

ErrorKind classify(const std::exception& e) {
  if (dynamic_cast<const Timeout*>(&e)) return ErrorKind::Timeout;
  if (dynamic_cast<const NondeterministicTarget*>(&e)) return ErrorKind::Nondeterministic;
  if (dynamic_cast<const ParseError*>(&e)) return ErrorKind::Parse;
  return ErrorKind::Target;
}

} // namespace

FunctionalityValidator::FunctionalityValidator(Target& target, std::vector<WorkloadQuery> suite, fs::path scratch)
    : target_(target), suite_(std::move(suite)), scratch_(std::move(scratch)) {}

ValidationVerdict FunctionalityValidator::validate(BranchId flip_id) {
  if (suite_.empty()) return ValidationVerdict::passed();
  auto coverage = scratch_ / "validate.cov";
  if (!baseline_) {
    baseline_.emplace();
    for (const auto& q : suite_) {
      try {
        baseline_->push_back(target_.execute(FlipSelection::none(), q.text, coverage).digest);
      } catch (const Error&) {
        baseline_->push_back(std::nullopt);
      }
    }
  }
  for (std::size_t i = 0; i < suite_.size(); ++i) {
    const auto& q = suite_[i];
    if (!(*baseline_)[i]) return ValidationVerdict::failed(q.id, "baseline run failed");
    std::optional<minidb::ResultDigest> flipped;
    try {
      flipped = target_.execute(FlipSelection::of(flip_id), q.text, coverage).digest;
    } catch (const Error& e) {
      return ValidationVerdict::failed(q.id, std::string("error: ") + e.what());
    }
    if (flipped != (*baseline_)[i])
      return ValidationVerdict::failed(q.id, "result digest differs from baseline");
  }
  return ValidationVerdict::passed();
}

ValidationVerdict validate_functionality(Target& target, BranchId flip_id, const fs::path& validation_dir) {
  auto suite = load_queries(validation_dir);
  if (suite.empty()) std::cerr << "warning: validation suite at '" << validation_dir.string() << "' is empty\n";
  ScratchDir scratch;
  FunctionalityValidator validator(target, std::move(suite), scratch.path());
  return validator.validate(flip_id);
}

std::vector<PlanRule> parse_plan_rules(const std::string& text) {
  std::vector<PlanRule> rules;
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    std::istringstream words(line);
    std::string a, c, extra;
    words >> a >> c >> extra;
    const std::string p1 = "parent=", p2 = "requires_child=";
    if (!extra.empty() || a.rfind(p1, 0) != 0 || c.rfind(p2, 0) != 0 || a.size() == p1.size() ||
        c.size() == p2.size())
      throw ConfigError("plan rules line " + std::to_string(n) + ": expected 'parent=<Kind> requires_child=<Kind>'");
    rules.push_back({a.substr(p1.size()), c.substr(p2.size())});
  }
  return rules;
}

std::vector<PlanViolation> check_plan_invariants(const std::string& explain_text, const std::vector<PlanRule>& rules) {
  struct Node {
    int line;
    std::size_t depth;
    std::string kind;
  };
  std::vector<Node> nodes;
  std::istringstream in(explain_text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.rfind("Total cost:", 0) == 0 || line.find_first_not_of(' ') == std::string::npos) continue;
    auto indent = line.find_first_not_of(' ');
    auto end = line.find_first_of("( ", indent);
    nodes.push_back({n, indent / 2, line.substr(indent, end - indent)});
  }
  std::vector<PlanViolation> out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (const auto& rule : rules) {
      if (nodes[i].kind != rule.parent) continue;
      bool ok = false;
      for (std::size_t j = i + 1; j < nodes.size() && nodes[j].depth > nodes[i].depth; ++j)
        if (nodes[j].depth == nodes[i].depth + 1 && nodes[j].kind == rule.requires_child) ok = true;
      if (!ok) out.push_back({nodes[i].line, rule});
    }
  }
  return out;
}

std::vector<PlanViolation> check_plan_invariants(const std::string& explain_text, const fs::path& rules_file) {
  std::ifstream in(rules_file, std::ios::binary);
  if (!in) throw ConfigError("cannot read plan rules " + rules_file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return check_plan_invariants(explain_text, parse_plan_rules(buf.str()));
}

CampaignResult run_campaign(const CampaignConfig& config) {
  config.validate();
  auto target = make_target(config.target);
  return run_campaign(config, *target);
}

CampaignResult run_campaign(const CampaignConfig& config, Target& target) {
  CampaignResult result;
  std::optional<instrument::Manifest> manifest;
  if (config.manifest_path) {
    manifest = instrument::Manifest::load(*config.manifest_path);
    result.manifest_size = manifest->sites.size();
  } else if (config.target.kind == TargetKind::Minidb) {
    result.manifest_size = static_cast<std::size_t>(minidb::flip_ids::kCount);
  }
  std::vector<PlanRule> rules;
  if (config.plan_rules) {
    std::ifstream in(*config.plan_rules, std::ios::binary);
    if (!in) throw ConfigError("cannot read plan rules " + config.plan_rules->string());
    std::ostringstream buf;
    buf << in.rdbuf();
    rules = parse_plan_rules(buf.str());
  }

  ScratchDir scratch;
  auto suite = load_queries(config.validation_dir);
  if (suite.empty()) std::cerr << "warning: validation suite is empty; every flip passes functionality validation\n";
  FunctionalityValidator validator(target, std::move(suite), scratch.path());
  auto suite_verdict = [&](BranchId id) -> const ValidationVerdict& {
    auto it = result.validation.find(id);
    if (it == result.validation.end()) it = result.validation.emplace(id, validator.validate(id)).first;
    return it->second;
  };

  const auto coverage = scratch.path() / "run.cov";
  for (const auto& q : load_queries(config.workload_dir)) {
    QueryReport report{q.id, q.text, std::nullopt, {}, {}};
    Measurement baseline;
    try {
      auto ex = target.explain(FlipSelection::none(), q.text);
      baseline = measure_with_repeats(target, FlipSelection::none(), q.text, config.repeats, config.metric, coverage);
      baseline.est_cost = ex.est_cost;
      baseline.explain_text = ex.explain_text;
    } catch (const std::exception& e) {
      report.skipped_reason = e.what();
      std::cerr << "warning: skipping query " << q.id << ": " << e.what() << "\n";
      result.queries.push_back(std::move(report));
      continue;
    }
    report.baseline = baseline;

    std::vector<BranchId> flips;
    for (BranchId id : baseline.coverage.ids)
      if (!manifest || manifest->find(id)) flips.push_back(id);
    std::sort(flips.begin(), flips.end());
    report.evaluated_flips = flips;

    for (BranchId id : flips) {
      FlipOutcome o;
      o.query_id = q.id;
      o.query_text = q.text;
      o.flip_id = id;
      o.baseline = baseline;
      const auto selection = FlipSelection::of(id);
      try {
        auto ex = target.explain(selection, q.text);
        o.flipped.est_cost = ex.est_cost;
        o.flipped.explain_text = ex.explain_text;

        ValidationVerdict validation = suite_verdict(id);
        if (validation.pass && !rules.empty()) {
          auto violations = check_plan_invariants(ex.explain_text, rules);
          if (!violations.empty())
            validation = ValidationVerdict::failed(q.id, "plan rule parent=" + violations.front().rule.parent +
                                                             " requires_child=" + violations.front().rule.requires_child +
                                                             " violated at line " +
                                                             std::to_string(violations.front().line));
        }

        bool cheaper = o.flipped.est_cost && baseline.est_cost && *o.flipped.est_cost < *baseline.est_cost;
        if (config.cost_gate && !cheaper) {
          o.cost_gated_out = true;
          o.verdict = validation.pass ? VerdictKind::NoGain : VerdictKind::FunctionalityAltering;
        } else {
          auto run = measure_with_repeats(target, selection, q.text, config.repeats, config.metric, coverage);
          o.flipped.work_units = run.work_units;
          o.flipped.wall_ms = run.wall_ms;
          o.flipped.digest = run.digest;
          o.flipped.coverage = run.coverage;
          if (validation.pass && run.digest != baseline.digest)
            validation = ValidationVerdict::failed(q.id, "result digest differs from baseline");
          auto d = decide_verdict(baseline, o.flipped, config, validation);
          o.verdict = d.verdict;
          o.ratio = d.ratio;
        }
        if (!validation.pass) {
          o.failing_query = validation.failing_query;
          o.detail = validation.reason;
        }
      } catch (const std::exception& e) {
        o.verdict = VerdictKind::Error;
        o.error = classify(e);
        o.detail = e.what();
      }
      result.outcomes.push_back(std::move(o));
    }
    result.queries.push_back(std::move(report));
  }
  return result;
}

namespace {

nlohmann::ordered_json ratio_json(const std::optional<double>& r) {
  if (!r) return nullptr;
  if (std::isinf(*r)) return "inf";
  return *r;
}

nlohmann::ordered_json measurement_json(const Measurement& m) {
  nlohmann::ordered_json j;
  j["est_cost"] = m.est_cost ? nlohmann::ordered_json(*m.est_cost) : nlohmann::ordered_json(nullptr);
  j["work_units"] = m.work_units ? nlohmann::ordered_json(*m.work_units) : nlohmann::ordered_json(nullptr);
  j["wall_ms"] = m.wall_ms;
  if (m.digest) {
    j["digest"] = m.digest->hex();
    j["row_count"] = m.digest->row_count;
  } else {
    j["digest"] = nullptr;
    j["row_count"] = nullptr;
  }
  j["coverage"] = m.coverage.ids;
  return j;
}

} // namespace

std::string outcomes_json(const CampaignResult& result, const CampaignConfig& config) {
  nlohmann::ordered_json j;
  j["metric"] = config.metric == Metric::WorkUnits ? "work_units" : "wall_ms";
  j["cost_gate"] = config.cost_gate;
  j["repeats"] = config.repeats;
  j["gap_threshold"] = config.gap_threshold;
  auto& queries = j["queries"] = nlohmann::ordered_json::array();
  for (const auto& q : result.queries) {
    nlohmann::ordered_json e;
    e["query_id"] = q.query_id;
    if (q.baseline) e["baseline"] = measurement_json(*q.baseline);
    else e["skipped"] = q.skipped_reason;
    e["evaluated_flips"] = q.evaluated_flips;
    queries.push_back(std::move(e));
  }
  auto& outcomes = j["outcomes"] = nlohmann::ordered_json::array();
  for (const auto& o : result.outcomes) {
    nlohmann::ordered_json e;
    e["query_id"] = o.query_id;
    e["flip_id"] = o.flip_id;
    e["verdict"] = verdict_name(o.verdict);
    if (o.error) e["error_kind"] = error_kind_name(*o.error);
    e["cost_gated_out"] = o.cost_gated_out;
    e["ratio"] = ratio_json(o.ratio);
    e["baseline"] = measurement_json(o.baseline);
    e["flipped"] = measurement_json(o.flipped);
    if (!o.failing_query.empty()) e["failing_query"] = o.failing_query;
    if (!o.detail.empty()) e["detail"] = o.detail;
    outcomes.push_back(std::move(e));
  }
  auto& validation = j["validation"] = nlohmann::ordered_json::object();
  for (const auto& [id, v] : result.validation) {
    nlohmann::ordered_json e;
    e["pass"] = v.pass;
    if (!v.pass) {
      e["failing_query"] = v.failing_query;
      e["reason"] = v.reason;
    }
    validation[std::to_string(id)] = std::move(e);
  }
  return j.dump(2) + "\n";
}

} // namespace bfa

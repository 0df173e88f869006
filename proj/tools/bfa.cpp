// bfa: branch flip analysis command-line tool.

#include "bfa/campaign.hpp"
#include "bfa/error.hpp"
#include "bfa/instrument.hpp"
#include "bfa/minidb/datagen.hpp"
#include "bfa/report.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kIssues = 1, kUsage = 2, kRuntime = 3 };

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

// LCS line diff; each output line is prefixed with ' ', '-' or '+'.
std::vector<std::string> line_diff(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::vector<int>> lcs(n + 1, std::vector<int>(m + 1, 0));
  for (std::size_t i = n; i-- > 0;)
    for (std::size_t j = m; j-- > 0;)
      lcs[i][j] = a[i] == b[j] ? lcs[i + 1][j + 1] + 1 : std::max(lcs[i + 1][j], lcs[i][j + 1]);
  std::vector<std::string> out;
  std::size_t i = 0, j = 0;
  while (i < n && j < m) {
    if (a[i] == b[j]) {
      out.push_back(" " + a[i]);
      ++i, ++j;
    } else if (lcs[i + 1][j] >= lcs[i][j + 1]) {
      out.push_back("-" + a[i++]);
    } else {
      out.push_back("+" + b[j++]);
    }
  }
  while (i < n) out.push_back("-" + a[i++]);
  while (j < m) out.push_back("+" + b[j++]);
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw bfa::ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Maps the error hierarchy onto the exit-code contract.
int guarded(const char* command, const std::function<int()>& body) {
  try {
    return body();
  } catch (const bfa::ConfigError& e) {
    std::cerr << "bfa " << command << ": config error: " << e.what() << "\n";
    return kUsage;
  } catch (const bfa::ParseError& e) {
    std::cerr << "bfa " << command << ": parse error: " << e.what() << "\n";
    return kUsage;
  } catch (const bfa::minidb::LoadError& e) {
    std::cerr << "bfa " << command << ": " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "bfa " << command << ": " << e.what() << "\n";
    return kRuntime;
  }
}

void add_version(CLI::App* app) { app->set_version_flag("--version", std::string("bfa ") + BFA_VERSION); }

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Branch flip analysis: find optimizer decisions whose negation runs faster"};
  add_version(&app);
  app.require_subcommand(1);

  // instrument
  auto* inst = app.add_subcommand("instrument", "Rewrite every if condition under a source tree into a flip guard");
  add_version(inst);
  std::string inst_root;
  std::vector<std::string> inst_globs;
  bfa::FlipEnv inst_env;
  inst->add_option("--root", inst_root, "Source tree root")->required();
  inst->add_option("--include", inst_globs, "Glob relative to the root, repeatable")->required();
  inst->add_option("--flip-var", inst_env.flip_var, "Flip selection variable")->capture_default_str();
  inst->add_option("--cov-var", inst_env.coverage_var, "Coverage log variable")->capture_default_str();

  // campaign
  auto* camp = app.add_subcommand("campaign", "Run the flip campaign over a workload");
  add_version(camp);
  std::string camp_config, camp_out;
  camp->add_option("--config", camp_config, "Campaign TOML file")->required();
  camp->add_option("--out", camp_out, "Output directory")->required();

  // validate
  auto* val = app.add_subcommand("validate", "Differential functionality check of one flip over the validation suite");
  add_version(val);
  std::string val_config;
  bfa::BranchId val_flip = 0;
  val->add_option("--config", val_config, "Campaign TOML file")->required();
  val->add_option("--flip", val_flip, "Branch id to flip")->required();

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a deterministic minidb dataset");
  add_version(gen);
  std::string gen_spec, gen_out;
  std::optional<std::uint64_t> gen_seed;
  gen->add_option("--spec", gen_spec, "Dataset spec JSON")->required();
  gen->add_option("--out", gen_out, "Output directory for <table>.csv")->required();
  gen->add_option("--seed", gen_seed, "Override the seed given in the dataset file");

  // explain-diff
  auto* diff = app.add_subcommand("explain-diff", "Show the baseline and flipped plans of one query");
  add_version(diff);
  std::string diff_config, diff_query, diff_query_file;
  bfa::BranchId diff_flip = 0;
  diff->add_option("--config", diff_config, "Campaign TOML file")->required();
  auto* dq = diff->add_option("--query", diff_query, "SQL text");
  auto* dqf = diff->add_option("--query-file", diff_query_file, "File holding the query");
  dq->excludes(dqf);
  dqf->excludes(dq);
  diff->add_option("--flip", diff_flip, "Branch id to flip")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  if (inst->parsed()) {
    return guarded("instrument", [&] {
      inst_env.validate();
      auto manifest = bfa::instrument::instrument_tree(inst_root, inst_globs, inst_env);
      std::set<std::string> files;
      for (const auto& s : manifest.sites) files.insert(s.file);
      std::cout << "instrumented " << manifest.sites.size() << " branch sites in " << files.size() << " files\n"
                << "manifest: " << (fs::path(inst_root) / bfa::instrument::kManifestName).string() << "\n";
      return kOk;
    });
  }

  if (camp->parsed()) {
    return guarded("campaign", [&] {
      auto config = bfa::CampaignConfig::load(camp_config);
      auto result = bfa::run_campaign(config);
      auto issues = bfa::report::write_campaign_outputs(result, config, camp_out);
      std::cout << issues.size() << (issues.size() == 1 ? " issue" : " issues") << " found; report: "
                << (fs::path(camp_out) / "report.txt").string() << "\n";
      for (const auto& i : issues)
        std::cout << "  flip " << i.flip_id << ": " << bfa::report::format_ratio(i.ratio) << "x on " << i.query_id
                  << "\n";
      return issues.empty() ? kOk : kIssues;
    });
  }

  if (val->parsed()) {
    return guarded("validate", [&] {
      auto config = bfa::CampaignConfig::load(val_config);
      auto target = bfa::make_target(config.target);
      auto verdict = bfa::validate_functionality(*target, val_flip, config.validation_dir);
      if (verdict.pass) {
        std::cout << "flip " << val_flip << ": pass\n";
        return kOk;
      }
      std::cout << "flip " << val_flip << ": fail on " << verdict.failing_query << " (" << verdict.reason << ")\n";
      return kIssues;
    });
  }

  if (gen->parsed()) {
    return guarded("gen", [&] {
      auto spec = bfa::minidb::DatasetSpec::load(gen_spec);
      if (gen_seed) spec.seed = *gen_seed;
      bfa::minidb::write_dataset(spec, gen_out);
      for (const auto& t : spec.tables)
        std::cout << (fs::path(gen_out) / (t.name + ".csv")).string() << " " << t.row_count << " rows\n";
      return kOk;
    });
  }

  if (diff->parsed()) {
    if (diff_query_file.empty() && dq->count() == 0) {
      std::cerr << "bfa explain-diff: one of --query or --query-file is required\n";
      return kUsage;
    }
    return guarded("explain-diff", [&] {
      auto config = bfa::CampaignConfig::load(diff_config);
      std::string query = diff_query_file.empty() ? diff_query : read_file(diff_query_file);
      auto target = bfa::make_target(config.target);
      auto base = target->explain(bfa::FlipSelection::none(), query).explain_text;
      auto flipped = target->explain(bfa::FlipSelection::of(diff_flip), query).explain_text;
      std::cout << "--- baseline\n" << base << "--- flip " << diff_flip << "\n" << flipped << "--- diff\n";
      for (const auto& line : line_diff(split_lines(base), split_lines(flipped))) std::cout << line << "\n";
      return base == flipped ? kOk : kIssues;
    });
  }
  return kUsage;
}

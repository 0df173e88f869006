#include "support.hpp"

#include <json.hpp>

#include <gtest/gtest.h>

#include <algorithm>

using testing_support::read_file;
using testing_support::run;
using testing_support::TempDir;
using testing_support::write_file;

namespace {

const std::string kBfa = BFA_CLI_PATH;
const std::string kMinidb = MINIDB_PATH;

std::string w1(const std::string& rel) { return (testing_support::workloads_dir() / "W1" / rel).string(); }

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

} // namespace

TEST(BfaCli, UsageErrorsExitTwo) {
  EXPECT_EQ(run({kBfa}).exit_code, 2);
  EXPECT_EQ(run({kBfa, "bogus"}).exit_code, 2);
  EXPECT_EQ(run({kBfa, "campaign"}).exit_code, 2);
  EXPECT_EQ(run({kBfa, "validate", "--config", w1("campaign.toml"), "--flip", "abc"}).exit_code, 2);
  EXPECT_EQ(run({kBfa, "campaign", "--config", "/nonexistent/c.toml", "--out", "/tmp/x"}).exit_code, 2);
}

TEST(BfaCli, HelpAndVersionExitZero) {
  for (const char* sub : {"instrument", "campaign", "validate", "gen", "explain-diff"}) {
    auto h = run({kBfa, sub, "--help"});
    EXPECT_EQ(h.exit_code, 0) << sub;
    EXPECT_FALSE(h.out.empty()) << sub;
    auto v = run({kBfa, sub, "--version"});
    EXPECT_EQ(v.exit_code, 0) << sub;
    EXPECT_FALSE(v.out.empty()) << sub;
  }
  EXPECT_EQ(run({kBfa, "--help"}).exit_code, 0);
}

TEST(BfaCli, InstrumentWritesManifestAndShim) {
  TempDir dir;
  write_file(dir / "src/a.c", "int f(int x) {\n  if (x > 1) return 1;\n  return 0;\n}\n");
  auto r = run({kBfa, "instrument", "--root", dir.path().string(), "--include", "src/*.c"});
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_TRUE(contains(r.out, "instrumented 1 branch sites in 1 files"));
  auto m = nlohmann::json::parse(read_file(dir / "bfa-manifest.json"));
  EXPECT_EQ(m["sites"].size(), 1u);
  EXPECT_TRUE(std::filesystem::exists(dir / "bfa_runtime.c"));
  EXPECT_TRUE(contains(read_file(dir / "src/a.c"), "__bfa_log(1)"));

  auto bad = run({kBfa, "instrument", "--root", dir.path().string(), "--include", "src/*.c", "--flip-var", "9x"});
  EXPECT_EQ(bad.exit_code, 2);
}

TEST(BfaCli, CampaignOnW1ReportsIssues) {
  TempDir out;
  auto r = run({kBfa, "campaign", "--config", w1("campaign.toml"), "--out", out.path().string()});
  EXPECT_EQ(r.exit_code, 1) << r.err;
  EXPECT_TRUE(contains(r.out, "3 issues found"));
  for (const char* f : {"outcomes.json", "issues.json", "coverage.json", "report.txt"})
    EXPECT_TRUE(std::filesystem::exists(out / f)) << f;
  auto issues = nlohmann::json::parse(read_file(out / "issues.json"));
  EXPECT_EQ(issues["issue_count"], 3);
  EXPECT_EQ(issues["issues"][0]["flip_id"], 3);
  auto cov = nlohmann::json::parse(read_file(out / "coverage.json"));
  EXPECT_GT(cov["increase_pct"].get<double>(), 0.0);
}

TEST(BfaCli, CampaignWithoutIssuesExitsZero) {
  TempDir dir;
  write_file(dir / "w/queries/only.sql", "SELECT * FROM t WHERE c < 5");
  write_file(dir / "c.toml", "workload_dir = \"w\"\n[target]\ndb = \"" + w1("data") + "\"\n");
  auto r = run({kBfa, "campaign", "--config", (dir / "c.toml").string(), "--out", (dir / "out").string()});
  EXPECT_EQ(r.exit_code, 0) << r.out << r.err;
  EXPECT_TRUE(contains(read_file(dir / "out/report.txt"), "0 issues found"));
}

TEST(BfaCli, Validate) {
  auto pass = run({kBfa, "validate", "--config", w1("campaign.toml"), "--flip", "1"});
  EXPECT_EQ(pass.exit_code, 0) << pass.err;
  EXPECT_TRUE(contains(pass.out, "flip 1: pass"));
  auto fail = run({kBfa, "validate", "--config", w1("campaign.toml"), "--flip", "5"});
  EXPECT_EQ(fail.exit_code, 1);
  EXPECT_TRUE(contains(fail.out, "fail on v11"));
}

TEST(BfaCli, ExplainDiff) {
  auto q1 = run({kBfa, "explain-diff", "--config", w1("campaign.toml"), "--query-file", w1("queries/q1.sql"),
                 "--flip", "1"});
  EXPECT_EQ(q1.exit_code, 1) << q1.err;
  EXPECT_TRUE(contains(q1.out, "--- baseline\n"));
  EXPECT_TRUE(contains(q1.out, "--- flip 1\n"));
  EXPECT_TRUE(contains(q1.out, "-  NestedLoopJoin(")) << q1.out;
  EXPECT_TRUE(contains(q1.out, "+  HashJoin(")) << q1.out;

  auto single = run({kBfa, "explain-diff", "--config", w1("campaign.toml"), "--query", "SELECT * FROM r WHERE a < 3",
                     "--flip", "1"});
  EXPECT_EQ(single.exit_code, 0) << single.out;
  auto unknown = run({kBfa, "explain-diff", "--config", w1("campaign.toml"), "--query", "SELECT * FROM r", "--flip",
                      "999"});
  EXPECT_EQ(unknown.exit_code, 0);
  auto both = run({kBfa, "explain-diff", "--config", w1("campaign.toml"), "--query", "SELECT * FROM r",
                   "--query-file", w1("queries/q1.sql"), "--flip", "1"});
  EXPECT_EQ(both.exit_code, 2);
  auto bad_sql = run({kBfa, "explain-diff", "--config", w1("campaign.toml"), "--query", "SELECT FROM", "--flip", "1"});
  EXPECT_NE(bad_sql.exit_code, 0);
  EXPECT_NE(bad_sql.exit_code, 1);
}

TEST(BfaCli, GenReproducesW1) {
  TempDir out;
  auto r = run({kBfa, "gen", "--spec", w1("dataset.json"), "--out", out.path().string()});
  ASSERT_EQ(r.exit_code, 0) << r.err;
  for (const char* t : {"r.csv", "s.csv", "t.csv"}) EXPECT_EQ(read_file(out / t), read_file(w1("data/") + t)) << t;
  TempDir other;
  ASSERT_EQ(run({kBfa, "gen", "--spec", w1("dataset.json"), "--out", other.path().string(), "--seed", "7"}).exit_code, 0);
  EXPECT_NE(read_file(other / "r.csv"), read_file(out / "r.csv"));
}

TEST(MinidbCli, StatsLineFormat) {
  auto r = run({kMinidb, "--db", w1("data"), "--digest", "--stats", "--query", "SELECT * FROM r JOIN s ON r.k = s.k"});
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_TRUE(contains(r.out, "work_units=506384 wall_ms=")) << r.out;
  auto line = r.out.substr(r.out.find("work_units="));
  EXPECT_TRUE(contains(line, " rows=")) << line;
  EXPECT_TRUE(contains(line, " digest=")) << line;
}

TEST(MinidbCli, FlipAndCoverageEnvironment) {
  TempDir dir;
  const auto cov = (dir / "cov.log").string();
  auto base = run({kMinidb, "--db", w1("data"), "--explain", "--query", "SELECT * FROM r JOIN s ON r.k = s.k"},
                  {{"BFA_COVERAGE_FILE", cov}}, {"BFA_FLIP"});
  ASSERT_EQ(base.exit_code, 0) << base.err;
  EXPECT_TRUE(contains(base.out, "NestedLoopJoin"));
  EXPECT_TRUE(contains(read_file(cov), "1\n"));
  auto flipped = run({kMinidb, "--db", w1("data"), "--explain", "--query", "SELECT * FROM r JOIN s ON r.k = s.k"},
                     {{"BFA_FLIP", "1"}}, {"BFA_COVERAGE_FILE"});
  EXPECT_TRUE(contains(flipped.out, "HashJoin"));
  auto zero = run({kMinidb, "--db", w1("data"), "--explain", "--query", "SELECT * FROM r JOIN s ON r.k = s.k"},
                  {{"BFA_FLIP", "0"}}, {"BFA_COVERAGE_FILE"});
  EXPECT_EQ(zero.out, base.out);
}

TEST(MinidbCli, ErrorsExitTwo) {
  EXPECT_EQ(run({kMinidb, "--db", w1("data"), "--execute", "--query", "SELEC * FROM r"}).exit_code, 2);
  EXPECT_EQ(run({kMinidb, "--db", w1("data"), "--execute", "--query", "SELECT * FROM nope"}).exit_code, 2);
  EXPECT_EQ(run({kMinidb, "--db", w1("data"), "--execute", "--query", "SELECT * FROM r"}, {{"BFA_FLIP", "x1"}})
                .exit_code,
            2);
  EXPECT_EQ(run({kMinidb, "--db", "/nonexistent/db", "--execute", "--query", "SELECT * FROM r"}).exit_code, 2);
  EXPECT_EQ(run({kMinidb, "--db", w1("data"), "--query", "SELECT * FROM r"}).exit_code, 2);
  EXPECT_EQ(run({kMinidb, "--db", w1("data"), "--explain", "--execute", "--query", "SELECT * FROM r"}).exit_code, 2);
}

TEST(MinidbCli, ExecutePrintsRows) {
  auto r = run({kMinidb, "--db", w1("data"), "--execute", "--query", "SELECT r.id FROM r LIMIT 3"});
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 3);
}

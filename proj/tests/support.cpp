#include "support.hpp"

#include "bfa/instrument.hpp"
#include "bfa/minidb/engine.hpp"
#include "oracle/oracle.hpp"

#include <algorithm>
#include <cstdlib>
#include <random>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unistd.h>

namespace testing_support {

fs::path source_dir() { return BFA_SOURCE_DIR; }
fs::path workloads_dir() { return source_dir() / "workloads"; }
fs::path fixtures_dir() { return source_dir() / "tests" / "fixtures"; }

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

TempDir::TempDir() {
  std::string tmpl = (fs::temp_directory_path() / "bfa-test-XXXXXX").string();
  if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
  path_ = tmpl;
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

bfa::ProcessResult run(std::vector<std::string> argv, bfa::Environment env, std::vector<std::string> unset) {
  bfa::ProcessSpec spec;
  spec.argv = std::move(argv);
  spec.set_env = std::move(env);
  for (auto& name : unset)
    if (!spec.set_env.count(name)) spec.unset_env.push_back(name);
  spec.timeout_s = 120;
  return bfa::run_process(spec);
}

bfa::minidb::Table table(const std::string& name, const std::string& csv) {
  return bfa::minidb::parse_table_csv(name, csv);
}

std::string find_c_compiler() {
  const char* path = std::getenv("PATH");
  if (!path) return {};
  std::stringstream dirs(path);
  std::string dir;
  std::vector<std::string> dirs_list;
  while (std::getline(dirs, dir, ':')) dirs_list.push_back(dir);
  for (const char* cc : {"cc", "gcc", "clang"})
    for (const auto& d : dirs_list)
      if (!d.empty() && access((fs::path(d) / cc).c_str(), X_OK) == 0) return (fs::path(d) / cc).string();
  return {};
}


namespace {

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

} // namespace

std::string check_flip_semantics(int inputs, bool& skipped, std::string* summary) {
  skipped = false;
  auto cc = find_c_compiler();
  if (cc.empty()) {
    skipped = true;
    return {};
  }
  TempDir dir;
  fs::copy_file(fixtures_dir() / "flipprog" / "prog.c", dir / "prog.c");
  auto original = read_file(dir / "prog.c");
  auto compile = [&](std::vector<std::string> argv) -> std::string {
    auto r = run(std::move(argv));
    return r.exit_code == 0 ? std::string() : "compile failed: " + r.err;
  };
  if (auto e = compile({cc, "-O0", "-o", (dir / "orig").string(), (dir / "prog.c").string()}); !e.empty()) return e;

  auto manifest = bfa::instrument::instrument_tree(dir.path(), {"prog.c"});
  const auto n = static_cast<int>(manifest.sites.size());
  if (n != 6) return "expected 6 sites, found " + std::to_string(n);
  // Branch k prints "Bk"; ids follow source order.
  auto src_lines = lines_of(original);
  for (const auto& s : manifest.sites) {
    auto label = "B" + std::to_string(s.id);
    bool found = false;
    for (int l = s.line; l <= std::min<int>(s.line + 3, static_cast<int>(src_lines.size())); ++l)
      found = found || src_lines[static_cast<std::size_t>(l - 1)].find(label) != std::string::npos;
    if (!found) return "site " + std::to_string(s.id) + " does not guard " + label;
  }
  if (auto e = compile({cc, "-std=c89", "-pedantic", "-Wall", "-Wextra", "-Werror", "-c", "-o",
                        (dir / "shim.o").string(), (dir / bfa::instrument::kShimName).string()});
      !e.empty())
    return "strict shim " + e;
  if (auto e = compile({cc, "-O0", "-include", (dir / bfa::instrument::kShimHeaderName).string(), "-o",
                        (dir / "inst").string(), (dir / "prog.c").string(), (dir / "shim.o").string()});
      !e.empty())
    return e;

  std::mt19937_64 rng(7);
  std::uniform_int_distribution<long> dist(-20, 40);
  int runs = 0;
  for (int i = 0; i < inputs; ++i) {
    std::vector<std::string> args{std::to_string(dist(rng)), std::to_string(dist(rng)), std::to_string(dist(rng))};
    auto with = [&](const fs::path& exe) {
      std::vector<std::string> argv{exe.string()};
      argv.insert(argv.end(), args.begin(), args.end());
      return argv;
    };
    auto orig = run(with(dir / "orig"));
    auto base = run(with(dir / "inst"));
    auto zero = run(with(dir / "inst"), {{"BFA_FLIP", "0"}});
    runs += 3;
    std::string input = args[0] + " " + args[1] + " " + args[2];
    if (orig.exit_code != 0 || orig.out != base.out) return "unflipped output differs for input " + input;
    if (zero.out != orig.out) return "BFA_FLIP=0 output differs for input " + input;

    auto expected_lines = lines_of(orig.out);
    for (int k = 1; k <= n; ++k) {
      auto cov = dir / "cov.log";
      fs::remove(cov);
      auto flipped = run(with(dir / "inst"), {{"BFA_FLIP", std::to_string(k)}, {"BFA_COVERAGE_FILE", cov.string()}});
      ++runs;
      auto got = lines_of(flipped.out);
      if (got.size() != expected_lines.size()) return "flip " + std::to_string(k) + " changed line count";
      for (std::size_t l = 0; l < got.size(); ++l) {
        auto label = "B" + std::to_string(k) + " ";
        bool is_target = expected_lines[l].rfind(label, 0) == 0;
        std::string want = expected_lines[l];
        if (is_target) want = label + (want.ends_with("then") ? "else" : "then");
        if (got[l] != want)
          return "flip " + std::to_string(k) + " on input " + input + ": expected '" + want + "' got '" + got[l] + "'";
      }
      auto ids = bfa::read_coverage_log(cov).ids;
      if (ids != std::vector<bfa::BranchId>{1, 2, 3, 4, 5, 6})
        return "coverage log for flip " + std::to_string(k) + " is not 1..6";
    }
  }
  if (summary)
    *summary = std::to_string(inputs) + " inputs, " + std::to_string(n) + " branches, " + std::to_string(runs) +
               " runs";
  return {};
}

std::vector<WorkloadQuery> workload_queries(const fs::path& dir) {
  std::vector<WorkloadQuery> out;
  for (const auto& e : fs::directory_iterator(dir / "queries"))
    if (e.path().extension() == ".sql") out.push_back({e.path().stem().string(), read_file(e.path())});
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

std::string check_oracle_equivalence(const bfa::minidb::Database& db, const std::vector<WorkloadQuery>& queries,
                                     const std::vector<bfa::BranchId>& flips, int* pairs) {
  using namespace bfa::minidb;
  int checked = 0;
  for (const auto& q : queries) {
    auto ast = parse_query(q.sql);
    auto naive = oracle::evaluate(ast, db);
    auto expected = oracle::canonical(naive.rows);
    std::vector<bfa::BranchId> baseline_coverage;
    std::vector<bfa::BranchId> todo{0};
    for (std::size_t i = 0; i < todo.size(); ++i) {
      const auto flip = todo[i];
      auto sel = bfa::FlipSelection::of(flip);
      bfa::CoverageSink sink;
      FlipContext ctx{sel, sink};
      auto run = run_query(q.sql, db, ctx);
      if (flip == 0)
        for (auto f : flips)
          if (sink.record().contains(f)) todo.push_back(f);
      auto where = q.id + " flip " + std::to_string(flip) + ": ";
      const auto& rows = run.result.rows;
      if (naive.limit) {
        auto want = std::min<std::int64_t>(*naive.limit, static_cast<std::int64_t>(naive.rows.size()));
        if (static_cast<std::int64_t>(rows.size()) != want) return where + "LIMIT row count differs";
        if (!oracle::is_submultiset(rows, naive.rows)) return where + "row outside the unlimited result";
      } else if (oracle::canonical(rows) != expected) {
        return where + "row multiset differs from naive evaluation";
      }
      auto sim = oracle::simulate(run.plan, db, flip);
      if (sim.rows != rows) return where + "row sequence differs from the plan simulator";
      if (sim.work_units != run.result.stats.work_units)
        return where + "work units " + std::to_string(run.result.stats.work_units) + " vs simulator " +
               std::to_string(sim.work_units);
      if (oracle::digest(rows) != run.digest.digest) return where + "digest differs from reference digest";
      ++checked;
    }
  }
  if (pairs) *pairs = checked;
  return {};
}

} // namespace testing_support

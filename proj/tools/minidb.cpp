// minidb: command-line front end of the bundled query engine.

#include "bfa/error.hpp"
#include "bfa/flipcore.hpp"
#include "bfa/minidb/engine.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw bfa::ConfigError("cannot read query file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void print_stats(const bfa::minidb::QueryRun& run) {
  std::printf("work_units=%lld wall_ms=%.3f rows=%lld digest=%s\n",
              static_cast<long long>(run.result.stats.work_units), run.result.stats.wall_ms,
              static_cast<long long>(run.result.stats.rows_out), run.digest.hex().c_str());
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"minidb: tiny relational engine with flip points"};
  app.set_version_flag("--version", std::string("minidb ") + BFA_VERSION);

  std::string db_dir, query, query_file;
  bool do_explain = false, do_execute = false, do_digest = false, stats = false;
  app.add_option("--db", db_dir, "Directory of <table>.csv files")->required();
  auto* mode = app.add_option_group("mode");
  mode->add_flag("--explain", do_explain, "Print the plan");
  mode->add_flag("--execute", do_execute, "Run the query and print result rows");
  mode->add_flag("--digest", do_digest, "Run the query and print the result digest");
  mode->require_option(1);
  auto* q = app.add_option("--query", query, "SQL text");
  auto* qf = app.add_option("--query-file", query_file, "File holding the SQL text");
  q->excludes(qf);
  qf->excludes(q);
  app.add_flag("--stats", stats, "Print work_units, wall_ms, rows and digest on one line");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  if (query_file.empty() && q->count() == 0) {
    std::cerr << "minidb: one of --query or --query-file is required\n";
    return 2;
  }

  bfa::FlipEnv names;
  bfa::FlipSelection selection;
  std::string coverage_path;
  try {
    auto env = bfa::current_environment();
    selection = bfa::resolve_flip_env(env, names);
    if (auto it = env.find(names.coverage_var); it != env.end()) coverage_path = it->second;
    if (!query_file.empty()) query = read_file(query_file);
  } catch (const bfa::Error& e) {
    std::cerr << "minidb: " << e.what() << "\n";
    return 2;
  }

  bfa::CoverageSink sink;
  bfa::minidb::FlipContext flips{selection, sink};
  int rc = 0;
  try {
    auto db = bfa::minidb::load_database(db_dir);
    if (do_explain) {
      auto ast = bfa::minidb::parse_query(query);
      std::cout << bfa::minidb::explain(ast, db, flips);
    } else {
      auto run = bfa::minidb::run_query(query, db, flips);
      std::cout << std::flush;
      if (do_execute) {
        for (const auto& row : run.result.rows) std::printf("%s\n", bfa::minidb::serialize_row(row).c_str());
      } else {
        std::printf("%s rows=%lld\n", run.digest.hex().c_str(), static_cast<long long>(run.digest.row_count));
      }
      if (stats) print_stats(run);
    }
  } catch (const bfa::minidb::SqlError& e) {
    std::cerr << "minidb: SQL error: " << e.what() << "\n";
    rc = 2;
  } catch (const bfa::minidb::PlanError& e) {
    std::cerr << "minidb: SQL error: " << e.what() << "\n";
    rc = 2;
  } catch (const bfa::minidb::LoadError& e) {
    std::cerr << "minidb: " << e.what() << "\n";
    rc = 2;
  } catch (const std::exception& e) {
    std::cerr << "minidb: " << e.what() << "\n";
    rc = 3;
  }
  std::fflush(stdout);
  if (!coverage_path.empty() && !sink.flush_to(coverage_path)) {
    std::cerr << "minidb: cannot write coverage log " << coverage_path << "\n";
    if (rc == 0) rc = 3;
  }
  return rc;
}

#pragma once

#include "bfa/minidb/database.hpp"
#include "bfa/subprocess.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace testing_support {

namespace fs = std::filesystem;

fs::path source_dir();
fs::path workloads_dir();
fs::path fixtures_dir();

std::string read_file(const fs::path& path);
void write_file(const fs::path& path, const std::string& text);

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

private:
  fs::path path_;
};

bfa::ProcessResult run(std::vector<std::string> argv, bfa::Environment env = {},
                       std::vector<std::string> unset = {"BFA_FLIP", "BFA_COVERAGE_FILE"});

/// Table from a compact CSV text ("a:int,b:text\n1,x\n").
bfa::minidb::Table table(const std::string& name, const std::string& csv);

/// First C compiler found on PATH, or empty.
std::string find_c_compiler();

/// Instruments the flip fixture program, compiles original and instrumented
/// builds and compares their outputs over `inputs` random argument triples.
/// Returns an empty string on success, otherwise the first discrepancy.
/// Sets `skipped` when no C compiler is available.
std::string check_flip_semantics(int inputs, bool& skipped, std::string* summary = nullptr);


struct WorkloadQuery {
  std::string id;
  std::string sql;
};

/// `<dir>/queries/*.sql` sorted by file name.
std::vector<WorkloadQuery> workload_queries(const fs::path& dir);

/// Engine rows against the naive evaluator (multiset equality, or subset
/// semantics under LIMIT) and engine work units against the plan
/// simulator, for every query and every flip in `flips` that the query's
/// baseline run reaches (plus the baseline itself). Returns the first
/// mismatch or an empty string; `pairs` receives the number checked.
std::string check_oracle_equivalence(const bfa::minidb::Database& db, const std::vector<WorkloadQuery>& queries,
                                     const std::vector<bfa::BranchId>& flips, int* pairs = nullptr);

} // namespace testing_support

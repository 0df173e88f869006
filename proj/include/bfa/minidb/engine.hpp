#pragma once

#include "bfa/minidb/database.hpp"
#include "bfa/minidb/digest.hpp"
#include "bfa/minidb/executor.hpp"
#include "bfa/minidb/plan.hpp"
#include "bfa/minidb/query.hpp"

#include <string>
#include <string_view>

namespace bfa::minidb {

/// Rendered plan of `ast`; planning errors propagate.
std::string explain(const QueryAst& ast, const Database& db, const FlipContext& flips);

struct QueryRun {
  Plan plan;
  ExecResult result;
  ResultDigest digest;
};

/// parse + plan + execute + digest.
QueryRun run_query(std::string_view sql, const Database& db, const FlipContext& flips);

} // namespace bfa::minidb

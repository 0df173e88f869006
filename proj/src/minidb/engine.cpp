#include "bfa/minidb/engine.hpp"

namespace bfa::minidb {

std::string explain(const QueryAst& ast, const Database& db, const FlipContext& flips) {
  return render_plan(plan_query(ast, db, flips));
}

QueryRun run_query(std::string_view sql, const Database& db, const FlipContext& flips) {
  auto ast = parse_query(sql);
  QueryRun run{plan_query(ast, db, flips), {}, {}};
  run.result = execute_plan(run.plan, db, flips);
  run.digest = result_digest(run.result.rows);
  return run;
}

} // namespace bfa::minidb

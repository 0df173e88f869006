#pragma once

#include "bfa/minidb/plan.hpp"

#include <cstdint>
#include <vector>

namespace bfa::minidb {

/// Deterministic cost proxy plus wall time of one execution.
struct ExecStats {
  std::int64_t work_units = 0;
  std::int64_t rows_out = 0;
  double wall_ms = 0.0;
};

struct ExecResult {
  std::vector<Row> rows;
  ExecStats stats;
};

std::uint64_t key_hash(const Value& v);

/// Pull-based execution. Work units: one per base row scanned, predicate
/// evaluated, hash insert, bucket entry compared, nested-loop comparison and
/// row returned by the root.
ExecResult execute_plan(const Plan& plan, const Database& db, const FlipContext& flips);

} // namespace bfa::minidb

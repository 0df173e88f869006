#pragma once

#include "bfa/flipcore.hpp"
#include "bfa/minidb/query.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace bfa::minidb {

/// Built-in flip points of the engine.
namespace flip_ids {
inline constexpr BranchId kJoinAlgorithm = 1;   // true: nested loop, false: hash join
inline constexpr BranchId kKeepPredicates = 2;  // true: predicates stay above the joins
inline constexpr BranchId kDrainLimit = 3;      // true: no early stop below LIMIT
inline constexpr BranchId kBuildLeft = 4;       // true: hash table built on the left input
inline constexpr BranchId kHashRecheck = 5;     // true: key equality rechecked after bucket match
inline constexpr BranchId kPushTarget = 6;      // true: predicate pushed onto its scan
inline constexpr BranchId kCount = 6;
} // namespace flip_ids

/// Inner-side row estimate below which a nested loop join is chosen.
inline constexpr std::int64_t kNestedLoopThreshold = 1000;
inline constexpr std::uint64_t kHashBuckets = 8;

/// The flip selection and coverage sink shared by every decision of a run.
struct FlipContext {
  const FlipSelection& selection;
  CoverageSink& coverage;

  bool point(BranchId id, bool condition) const { return flip_point(id, condition, selection, coverage); }
};

struct OutputColumn {
  std::string table;
  std::string column;
  ColumnType type = ColumnType::Int;

  std::string qualified() const { return table + "." + column; }
};

/// A column resolved to a position in some node's output row.
struct BoundColumn {
  OutputColumn column;
  int index = -1;
};

struct BoundPredicate {
  BoundColumn column;
  CompareOp op = CompareOp::Eq;
  Value constant;

  bool eval(const Row& row) const { return compare(row[static_cast<std::size_t>(column.index)], op, constant); }
  std::string to_string() const;
};

enum class NodeKind { SeqScan, Filter, NestedLoopJoin, HashJoin, Project, Limit };

const char* kind_name(NodeKind kind);

struct PlanNode {
  NodeKind kind = NodeKind::SeqScan;
  std::vector<PlanNode> children; // joins: {left, right}; others: {child}

  std::string table;                      // SeqScan
  std::vector<BoundPredicate> predicates; // Filter
  BoundColumn left_key;                   // joins, index into the left child's row
  BoundColumn right_key;                  // joins, index into the right child's row
  bool build_left = true;                 // HashJoin
  bool star = false;                      // Project
  std::vector<BoundColumn> projections;   // Project
  std::int64_t limit = 0;                 // Limit
  bool early_stop = true;                 // Limit

  std::vector<OutputColumn> output;
  std::int64_t est_rows = 0;
  std::int64_t est_cost = 0;

  std::string detail() const;
};

struct Plan {
  PlanNode root;
  std::int64_t total_cost() const { return root.est_cost; }
};

class PlanError : public Error {
public:
  using Error::Error;
};

/// Annotates `node` from its (already annotated) children.
void estimate_cost(PlanNode& node, const Database& db);

/// Builds the left-deep plan, routing each heuristic decision through a flip
/// point.
Plan plan_query(const QueryAst& ast, const Database& db, const FlipContext& flips);

/// One node per line, two spaces of indent per depth, then `Total cost: n`.
std::string render_plan(const Plan& plan);

} // namespace bfa::minidb

#include "bfa/minidb/plan.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace bfa::minidb {

const char* kind_name(NodeKind kind) {
  switch (kind) {
  case NodeKind::SeqScan: return "SeqScan";
  case NodeKind::Filter: return "Filter";
  case NodeKind::NestedLoopJoin: return "NestedLoopJoin";
  case NodeKind::HashJoin: return "HashJoin";
  case NodeKind::Project: return "Project";
  case NodeKind::Limit: return "Limit";
  }
  return "?";
}

std::string BoundPredicate::to_string() const {
  return column.column.qualified() + " " + op_text(op) + " " + literal_text(constant);
}

std::string PlanNode::detail() const {
  std::string d;
  auto join_keys = [&] { return left_key.column.qualified() + " = " + right_key.column.qualified(); };
  switch (kind) {
  case NodeKind::SeqScan: d = table; break;
  case NodeKind::Filter:
    for (std::size_t i = 0; i < predicates.size(); ++i) {
      if (i) d += " AND ";
      d += predicates[i].to_string();
    }
    break;
  case NodeKind::NestedLoopJoin: d = join_keys(); break;
  case NodeKind::HashJoin: d = join_keys() + (build_left ? ", build=left" : ", build=right"); break;
  case NodeKind::Project:
    if (star) {
      d = "*";
    } else {
      for (std::size_t i = 0; i < projections.size(); ++i) {
        if (i) d += ", ";
        d += projections[i].column.qualified();
      }
    }
    break;
  case NodeKind::Limit: d = std::to_string(limit) + (early_stop ? "" : ", no-early-stop"); break;
  }
  return d;
}

namespace {

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

} // namespace

void estimate_cost(PlanNode& node, const Database& db) {
  auto child = [&](std::size_t i) -> const PlanNode& { return node.children.at(i); };
  switch (node.kind) {
  case NodeKind::SeqScan: {
    auto it = db.stats.find(node.table);
    node.est_rows = it == db.stats.end() ? 0 : it->second;
    node.est_cost = node.est_rows;
    break;
  }
  case NodeKind::Filter: {
    // Selectivity 0.1 per predicate, rounded up.
    std::int64_t rows = child(0).est_rows;
    for (std::size_t i = 0; i < node.predicates.size() && rows > 1; ++i) rows = ceil_div(rows, 10);
    node.est_rows = rows;
    node.est_cost = child(0).est_cost + child(0).est_rows;
    break;
  }
  case NodeKind::NestedLoopJoin: {
    const auto& l = child(0);
    const auto& r = child(1);
    node.est_rows = std::min(l.est_rows, r.est_rows);
    node.est_cost = l.est_cost + r.est_cost + l.est_rows * r.est_rows;
    break;
  }
  case NodeKind::HashJoin: {
    const auto& l = child(0);
    const auto& r = child(1);
    node.est_rows = std::min(l.est_rows, r.est_rows);
    node.est_cost = l.est_cost + r.est_cost + l.est_rows + r.est_rows + std::min(l.est_rows, r.est_rows);
    break;
  }
  case NodeKind::Project:
    node.est_rows = child(0).est_rows;
    node.est_cost = child(0).est_cost;
    break;
  case NodeKind::Limit: {
    const auto& c = child(0);
    node.est_rows = std::min(node.limit, c.est_rows);
    node.est_cost = c.est_cost;
    // An early-stopping limit pays only for the fraction of input it pulls.
    if (node.early_stop && c.est_rows > 0) {
      auto scaled = (static_cast<__int128>(c.est_cost) * node.est_rows + c.est_rows - 1) / c.est_rows;
      node.est_cost = static_cast<std::int64_t>(scaled);
    }
    break;
  }
  }
}

namespace {

struct Binder {
  const Database& db;
  std::vector<const Table*> tables; // query order

  const Table* table_named(const std::string& name) const {
    for (const auto* t : tables)
      if (t->name == name) return t;
    return nullptr;
  }

  /// Returns (table, column index in that table).
  std::pair<const Table*, int> resolve(const ColumnRef& ref) const {
    if (!ref.table.empty()) {
      const auto* t = table_named(ref.table);
      if (!t) throw PlanError("unknown table '" + ref.table + "' in column " + ref.to_string());
      int idx = t->column_index(ref.column);
      if (idx < 0) throw PlanError("unknown column '" + ref.to_string() + "'");
      return {t, idx};
    }
    std::pair<const Table*, int> found{nullptr, -1};
    for (const auto* t : tables) {
      int idx = t->column_index(ref.column);
      if (idx < 0) continue;
      if (found.first) throw PlanError("ambiguous column '" + ref.column + "'");
      found = {t, idx};
    }
    if (!found.first) throw PlanError("unknown column '" + ref.column + "'");
    return found;
  }
};

int find_output(const std::vector<OutputColumn>& out, const std::string& table, const std::string& column) {
  for (std::size_t i = 0; i < out.size(); ++i)
    if (out[i].table == table && out[i].column == column) return static_cast<int>(i);
  return -1;
}

BoundColumn bind_to(const std::vector<OutputColumn>& out, const Table& table, int table_index) {
  const auto& col = table.schema[static_cast<std::size_t>(table_index)];
  BoundColumn b;
  b.column = OutputColumn{table.name, col.name, col.type};
  b.index = find_output(out, table.name, col.name);
  return b;
}

struct PendingPredicate {
  const Table* table;
  int column;
  CompareOp op;
  Value constant;
};

PlanNode make_scan(const Table& t, const Database& db) {
  PlanNode n;
  n.kind = NodeKind::SeqScan;
  n.table = t.name;
  for (const auto& c : t.schema) n.output.push_back({t.name, c.name, c.type});
  estimate_cost(n, db);
  return n;
}

PlanNode make_filter(PlanNode child, const std::vector<PendingPredicate>& preds, const Database& db) {
  PlanNode n;
  n.kind = NodeKind::Filter;
  n.output = child.output;
  for (const auto& p : preds) {
    BoundPredicate bp;
    bp.column = bind_to(n.output, *p.table, p.column);
    bp.op = p.op;
    bp.constant = p.constant;
    n.predicates.push_back(std::move(bp));
  }
  n.children.push_back(std::move(child));
  estimate_cost(n, db);
  return n;
}

} // namespace

Plan plan_query(const QueryAst& ast, const Database& db, const FlipContext& flips) {
  Binder binder{db, {}};
  auto add_table = [&](const std::string& name) {
    const auto* t = db.find(name);
    if (!t) throw PlanError("unknown table '" + name + "'");
    if (binder.table_named(name)) throw PlanError("table '" + name + "' appears more than once");
    binder.tables.push_back(t);
  };
  add_table(ast.base);
  for (const auto& j : ast.joins) add_table(j.table);
  const bool has_join = !ast.joins.empty();

  std::vector<PendingPredicate> predicates;
  for (const auto& p : ast.predicates) {
    auto [table, idx] = binder.resolve(p.column);
    auto type = table->schema[static_cast<std::size_t>(idx)].type;
    bool int_constant = std::holds_alternative<std::int64_t>(p.constant);
    if ((type == ColumnType::Int) != int_constant)
      throw PlanError("type mismatch: " + p.column.to_string() + " is " + type_name(type) + ", constant is " +
                      literal_text(p.constant));
    predicates.push_back({table, idx, p.op, p.constant});
  }

  struct JoinKeys {
    const Table* left_table;
    int left_column;
    int right_column;
  };
  std::vector<JoinKeys> join_keys;
  for (std::size_t k = 0; k < ast.joins.size(); ++k) {
    const auto& j = ast.joins[k];
    const Table* joined = binder.tables[k + 1];
    auto a = binder.resolve(j.left);
    auto b = binder.resolve(j.right);
    auto earlier = [&](const Table* t) {
      return std::find(binder.tables.begin(), binder.tables.begin() + static_cast<std::ptrdiff_t>(k + 1), t) !=
             binder.tables.begin() + static_cast<std::ptrdiff_t>(k + 1);
    };
    if (b.first != joined) std::swap(a, b);
    if (b.first != joined || !earlier(a.first))
      throw PlanError("join condition for '" + j.table + "' must compare a column of '" + j.table +
                      "' with a column of an earlier table");
    if (a.first->schema[static_cast<std::size_t>(a.second)].type !=
        b.first->schema[static_cast<std::size_t>(b.second)].type)
      throw PlanError("join columns " + j.left.to_string() + " and " + j.right.to_string() + " differ in type");
    join_keys.push_back({a.first, a.second, b.second});
  }

  // Predicate placement.
  std::map<const Table*, std::vector<PendingPredicate>> pushed;
  std::vector<PendingPredicate> residual;
  bool keep_above = flips.point(flip_ids::kKeepPredicates, has_join && predicates.size() > 1);
  if (!has_join) {
    if (!predicates.empty()) pushed[binder.tables.front()] = predicates;
  } else if (keep_above) {
    residual = predicates;
  } else {
    for (const auto& p : predicates) {
      bool has_scan = binder.table_named(p.table->name) != nullptr;
      if (flips.point(flip_ids::kPushTarget, has_scan)) pushed[p.table].push_back(p);
      else residual.push_back(p);
    }
  }

  auto leaf = [&](const Table* t) {
    auto scan = make_scan(*t, db);
    auto it = pushed.find(t);
    if (it == pushed.end()) return scan;
    return make_filter(std::move(scan), it->second, db);
  };

  PlanNode tree = leaf(binder.tables.front());
  for (std::size_t k = 0; k < join_keys.size(); ++k) {
    PlanNode right = leaf(binder.tables[k + 1]);
    PlanNode join;
    join.output = tree.output;
    join.output.insert(join.output.end(), right.output.begin(), right.output.end());
    join.left_key = bind_to(tree.output, *join_keys[k].left_table, join_keys[k].left_column);
    join.right_key = bind_to(right.output, *binder.tables[k + 1], join_keys[k].right_column);

    bool nested = flips.point(flip_ids::kJoinAlgorithm, right.est_rows < kNestedLoopThreshold);
    if (nested) {
      join.kind = NodeKind::NestedLoopJoin;
    } else {
      join.kind = NodeKind::HashJoin;
      join.build_left = flips.point(flip_ids::kBuildLeft, tree.est_rows <= right.est_rows);
    }
    join.children.push_back(std::move(tree));
    join.children.push_back(std::move(right));
    estimate_cost(join, db);
    tree = std::move(join);
  }

  if (!residual.empty()) tree = make_filter(std::move(tree), residual, db);

  PlanNode project;
  project.kind = NodeKind::Project;
  project.star = ast.star;
  if (ast.star) {
    project.output = tree.output;
  } else {
    for (const auto& ref : ast.projections) {
      auto [t, idx] = binder.resolve(ref);
      auto b = bind_to(tree.output, *t, idx);
      project.output.push_back(b.column);
      project.projections.push_back(std::move(b));
    }
  }
  project.children.push_back(std::move(tree));
  estimate_cost(project, db);

  bool drain = flips.point(flip_ids::kDrainLimit, ast.limit.has_value() && has_join);
  if (!ast.limit) return Plan{std::move(project)};

  PlanNode limit;
  limit.kind = NodeKind::Limit;
  limit.limit = *ast.limit;
  limit.early_stop = !drain;
  limit.output = project.output;
  limit.children.push_back(std::move(project));
  estimate_cost(limit, db);
  return Plan{std::move(limit)};
}

namespace {

void render_node(const PlanNode& n, int depth, std::ostringstream& out) {
  out << std::string(static_cast<std::size_t>(depth) * 2, ' ') << kind_name(n.kind) << '(' << n.detail()
      << ") rows=" << n.est_rows << " cost=" << n.est_cost << '\n';
  for (const auto& c : n.children) render_node(c, depth + 1, out);
}

} // namespace

std::string render_plan(const Plan& plan) {
  std::ostringstream out;
  render_node(plan.root, 0, out);
  out << "Total cost: " << plan.total_cost() << '\n';
  return out.str();
}

} // namespace bfa::minidb

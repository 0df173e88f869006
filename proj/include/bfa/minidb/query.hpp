#pragma once

#include "bfa/minidb/database.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bfa::minidb {

/// A column reference as written; `table` is empty when unqualified.
struct ColumnRef {
  std::string table;
  std::string column;

  std::string to_string() const { return table.empty() ? column : table + "." + column; }
  friend bool operator==(const ColumnRef&, const ColumnRef&) = default;
};

enum class CompareOp { Eq, Lt, Gt, Le, Ge, Ne };

const char* op_text(CompareOp op);
bool compare(const Value& lhs, CompareOp op, const Value& rhs);

struct Predicate {
  ColumnRef column;
  CompareOp op = CompareOp::Eq;
  Value constant;
};

struct JoinClause {
  std::string table;
  ColumnRef left;
  ColumnRef right;
};

struct QueryAst {
  bool star = false;
  std::vector<ColumnRef> projections;
  std::string base;
  std::vector<JoinClause> joins;
  std::vector<Predicate> predicates;
  std::optional<std::int64_t> limit;
};

/// Syntax errors carry the 1-based byte offset of the offending token.
class SqlError : public Error {
public:
  SqlError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

private:
  std::size_t offset_;
};

/// SELECT cols FROM t (JOIN t ON c = c)* (WHERE pred (AND pred)*)? (LIMIT n)? [;]
QueryAst parse_query(std::string_view text);

std::string literal_text(const Value& v);

} // namespace bfa::minidb

#pragma once

#include "bfa/error.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace bfa::minidb {

enum class ColumnType { Int, Text };

using Value = std::variant<std::int64_t, std::string>;
using Row = std::vector<Value>;

struct Column {
  std::string name;
  ColumnType type = ColumnType::Int;
};

struct Table {
  std::string name;
  std::vector<Column> schema;
  std::vector<Row> rows;

  /// -1 when absent.
  int column_index(const std::string& column) const;
};

struct Database {
  std::map<std::string, Table> tables;
  std::map<std::string, std::int64_t> stats; // table -> row_count

  const Table* find(const std::string& table) const;
  void add_table(Table table);
};

class LoadError : public Error {
public:
  using Error::Error;
};

/// Loads every `<table>.csv` in `dir`. The first line of each file is the
/// `name:type,...` header; blank lines are ignored.
Database load_database(const std::filesystem::path& dir);

Table parse_table_csv(const std::string& table, const std::string& text);

std::string to_lower(std::string s);
const char* type_name(ColumnType t);
bool is_identifier(std::string_view s);

/// Canonical text of a value: decimal ints, raw text.
std::string canonical(const Value& v);

} // namespace bfa::minidb

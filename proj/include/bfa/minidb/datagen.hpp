#pragma once

#include "bfa/minidb/database.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace bfa::minidb {

/// 64-bit LCG; each draw advances the state and returns its top 31 bits.
class Lcg {
public:
  static constexpr std::uint64_t kMultiplier = 6364136223846793005ULL;
  static constexpr std::uint64_t kIncrement = 1442695040888963407ULL;

  explicit Lcg(std::uint64_t seed) : state_(seed) {}

  std::uint64_t draw() {
    state_ = state_ * kMultiplier + kIncrement;
    return state_ >> 33;
  }
  std::uint64_t state() const { return state_; }

private:
  std::uint64_t state_;
};

struct ColumnSpec {
  std::string name;
  ColumnType type = ColumnType::Int;
  std::int64_t range = 1; // int columns draw from [0, range)
};

struct TableSpec {
  std::string name;
  std::int64_t row_count = 0;
  std::vector<ColumnSpec> columns;
};

struct DatasetSpec {
  static constexpr std::size_t kTokenCount = 16;

  std::uint64_t seed = 0;
  std::vector<std::string> tokens;
  std::vector<TableSpec> tables;

  /// JSON: {"seed": n, "tokens": [16 strings], "tables": [{"name", "rows",
  /// "columns": [{"name", "type": "int"|"text", "range"}]}]}
  static DatasetSpec from_json(const std::string& text);
  static DatasetSpec load(const std::filesystem::path& path);
};

/// table name -> CSV text, generated in declaration order with one LCG
/// threaded through every table, row and column.
std::map<std::string, std::string> generate_dataset(const DatasetSpec& spec);

void write_dataset(const DatasetSpec& spec, const std::filesystem::path& dir);

} // namespace bfa::minidb

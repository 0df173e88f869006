#include "bfa/minidb/database.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace bfa::minidb {

namespace fs = std::filesystem;

int Table::column_index(const std::string& column) const {
  for (std::size_t i = 0; i < schema.size(); ++i)
    if (schema[i].name == column) return static_cast<int>(i);
  return -1;
}

const Table* Database::find(const std::string& table) const {
  auto it = tables.find(table);
  return it == tables.end() ? nullptr : &it->second;
}

void Database::add_table(Table table) {
  if (tables.count(table.name)) throw LoadError("duplicate table '" + table.name + "'");
  stats[table.name] = static_cast<std::int64_t>(table.rows.size());
  auto name = table.name;
  tables.emplace(std::move(name), std::move(table));
}

std::string to_lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

const char* type_name(ColumnType t) { return t == ColumnType::Int ? "int" : "text"; }

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  auto ok_head = [](unsigned char c) { return std::isalpha(c) || c == '_'; };
  auto ok_tail = [](unsigned char c) { return std::isalnum(c) || c == '_'; };
  if (!ok_head(static_cast<unsigned char>(s[0]))) return false;
  return std::all_of(s.begin() + 1, s.end(), [&](char c) { return ok_tail(static_cast<unsigned char>(c)); });
}

std::string canonical(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  return std::get<std::string>(v);
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

} // namespace

Table parse_table_csv(const std::string& table, const std::string& text) {
  Table t;
  t.name = table;
  std::istringstream in(text);
  std::string line;
  bool header = false;
  int row_no = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!header) {
      header = true;
      for (const auto& field : split(line, ',')) {
        auto colon = field.find(':');
        if (colon == std::string::npos)
          throw LoadError(table + ": header field '" + field + "' is not name:type");
        Column c;
        c.name = to_lower(field.substr(0, colon));
        auto type = to_lower(field.substr(colon + 1));
        if (!is_identifier(c.name)) throw LoadError(table + ": bad column name '" + c.name + "'");
        if (type == "int") c.type = ColumnType::Int;
        else if (type == "text") c.type = ColumnType::Text;
        else throw LoadError(table + ": unknown column type '" + type + "'");
        if (t.column_index(c.name) >= 0) throw LoadError(table + ": duplicate column '" + c.name + "'");
        t.schema.push_back(std::move(c));
      }
      continue;
    }
    if (line.empty()) continue;
    ++row_no;
    auto fields = split(line, ',');
    if (fields.size() != t.schema.size())
      throw LoadError(table + ": row " + std::to_string(row_no) + " has " + std::to_string(fields.size()) +
                      " fields, expected " + std::to_string(t.schema.size()));
    Row row;
    row.reserve(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (t.schema[i].type == ColumnType::Int) {
        std::int64_t v = 0;
        const auto& f = fields[i];
        auto [end, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
        if (f.empty() || ec != std::errc{} || end != f.data() + f.size())
          throw LoadError(table + ": row " + std::to_string(row_no) + ": value '" + f +
                          "' is not an int (column " + t.schema[i].name + ")");
        row.emplace_back(v);
      } else {
        row.emplace_back(fields[i]);
      }
    }
    t.rows.push_back(std::move(row));
  }
  if (!header) throw LoadError(table + ": missing header line");
  return t;
}

Database load_database(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw LoadError("database directory " + dir.string() + " not found");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  Database db;
  for (const auto& path : files) {
    auto name = to_lower(path.stem().string());
    if (!is_identifier(name)) throw LoadError("table file " + path.string() + " is not a valid table name");
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    db.add_table(parse_table_csv(name, buf.str()));
  }
  return db;
}

} // namespace bfa::minidb

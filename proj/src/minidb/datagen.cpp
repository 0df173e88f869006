#include "bfa/minidb/datagen.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace bfa::minidb {

namespace fs = std::filesystem;

DatasetSpec DatasetSpec::from_json(const std::string& text) {
  DatasetSpec spec;
  try {
    auto j = nlohmann::json::parse(text);
    spec.seed = j.at("seed").get<std::uint64_t>();
    spec.tokens = j.at("tokens").get<std::vector<std::string>>();
    for (const auto& t : j.at("tables")) {
      TableSpec ts;
      ts.name = to_lower(t.at("name").get<std::string>());
      ts.row_count = t.at("rows").get<std::int64_t>();
      for (const auto& c : t.at("columns")) {
        ColumnSpec cs;
        cs.name = to_lower(c.at("name").get<std::string>());
        auto type = c.at("type").get<std::string>();
        if (type == "int") {
          cs.type = ColumnType::Int;
          cs.range = c.at("range").get<std::int64_t>();
          if (cs.range < 1) throw ConfigError("column " + cs.name + ": range must be >= 1");
        } else if (type == "text") {
          cs.type = ColumnType::Text;
        } else {
          throw ConfigError("column " + cs.name + ": unknown type '" + type + "'");
        }
        if (!is_identifier(cs.name)) throw ConfigError("bad column name '" + cs.name + "'");
        ts.columns.push_back(std::move(cs));
      }
      if (ts.row_count < 0) throw ConfigError("table " + ts.name + ": rows must be >= 0");
      if (!is_identifier(ts.name)) throw ConfigError("bad table name '" + ts.name + "'");
      if (ts.columns.empty()) throw ConfigError("table " + ts.name + " has no columns");
      spec.tables.push_back(std::move(ts));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("dataset spec: ") + e.what());
  }
  if (spec.tokens.size() != kTokenCount)
    throw ConfigError("dataset spec: tokens must list exactly " + std::to_string(kTokenCount) + " entries");
  for (const auto& tok : spec.tokens)
    if (tok.empty() || tok.find_first_of(",\t\r\n") != std::string::npos)
      throw ConfigError("dataset spec: token '" + tok + "' is empty or contains a separator");
  return spec;
}

DatasetSpec DatasetSpec::load(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read dataset spec " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

std::map<std::string, std::string> generate_dataset(const DatasetSpec& spec) {
  Lcg lcg(spec.seed);
  std::map<std::string, std::string> files;
  for (const auto& t : spec.tables) {
    std::string csv;
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
      if (i) csv += ',';
      csv += t.columns[i].name;
      csv += ':';
      csv += type_name(t.columns[i].type);
    }
    csv += '\n';
    for (std::int64_t r = 0; r < t.row_count; ++r) {
      for (std::size_t i = 0; i < t.columns.size(); ++i) {
        if (i) csv += ',';
        auto draw = lcg.draw();
        const auto& c = t.columns[i];
        if (c.type == ColumnType::Int) csv += std::to_string(draw % static_cast<std::uint64_t>(c.range));
        else csv += spec.tokens[draw % spec.tokens.size()];
      }
      csv += '\n';
    }
    if (files.count(t.name)) throw ConfigError("dataset spec: duplicate table '" + t.name + "'");
    files.emplace(t.name, std::move(csv));
  }
  return files;
}

void write_dataset(const DatasetSpec& spec, const fs::path& dir) {
  auto files = generate_dataset(spec);
  fs::create_directories(dir);
  for (const auto& [name, csv] : files) {
    std::ofstream out(dir / (name + ".csv"), std::ios::binary | std::ios::trunc);
    out << csv;
    if (!out) throw Error("cannot write " + (dir / (name + ".csv")).string());
  }
}

} // namespace bfa::minidb

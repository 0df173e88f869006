#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <variant>

namespace bfa::config {

using Value = std::variant<bool, std::int64_t, double, std::string>;

/// Flattened key -> value; keys under `[a.b]` become `a.b.key`.
using Document = std::map<std::string, Value>;

/// Reads the TOML subset used by campaign configs: `[table]` headers
/// (dotted allowed), `key = value` with basic/literal strings, integers,
/// floats and booleans, and `#` comments.
Document parse_toml(const std::string& text);
Document load_toml(const std::filesystem::path& path);

} // namespace bfa::config

#include "bfa/minidb/digest.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>

namespace bfa::minidb {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state) {
  for (unsigned char c : bytes) {
    state ^= c;
    state *= kFnvPrime;
  }
  return state;
}

std::string ResultDigest::hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(digest));
  return buf;
}

std::string serialize_row(const Row& row) {
  std::string s;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) s += '\t';
    s += canonical(row[i]);
  }
  return s;
}

ResultDigest result_digest_lines(std::vector<std::string> lines) {
  std::sort(lines.begin(), lines.end());
  ResultDigest d;
  d.row_count = static_cast<std::int64_t>(lines.size());
  for (const auto& line : lines) {
    d.digest = fnv1a64(line, d.digest);
    d.digest = fnv1a64("\n", d.digest);
  }
  return d;
}

ResultDigest result_digest(std::span<const Row> rows) {
  std::vector<std::string> lines;
  lines.reserve(rows.size());
  for (const auto& r : rows) lines.push_back(serialize_row(r));
  return result_digest_lines(std::move(lines));
}

std::optional<std::uint64_t> parse_hex16(std::string_view text) {
  std::uint64_t v = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v, 16);
  if (text.size() != 16 || ec != std::errc{} || end != text.data() + text.size()) return std::nullopt;
  return v;
}

} // namespace bfa::minidb

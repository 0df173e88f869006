#pragma once

#include "bfa/minidb/database.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bfa::minidb {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state = kFnvOffset);

/// Order-insensitive, duplicate-sensitive fingerprint of a result multiset.
struct ResultDigest {
  std::uint64_t digest = kFnvOffset;
  std::int64_t row_count = 0;

  std::string hex() const;
  friend bool operator==(const ResultDigest&, const ResultDigest&) = default;
};

/// Tab-joined canonical values, no trailing newline.
std::string serialize_row(const Row& row);

ResultDigest result_digest(std::span<const Row> rows);
/// Same digest over rows already serialized by serialize_row.
ResultDigest result_digest_lines(std::vector<std::string> lines);

/// Exactly 16 hex digits, either case.
std::optional<std::uint64_t> parse_hex16(std::string_view text);

} // namespace bfa::minidb

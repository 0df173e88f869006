#pragma once

#include "bfa/flipcore.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bfa::instrument {

inline constexpr const char* kManifestName = "bfa-manifest.json";
inline constexpr const char* kBackupDir = ".bfa-backup";
inline constexpr const char* kShimName = "bfa_runtime.c";
inline constexpr const char* kShimHeaderName = "bfa_runtime.h";

/// One flippable IF statement. `line`/`column` locate the `if` keyword
/// (1-based, byte columns); `condition` is the verbatim text between the
/// condition's outer parentheses.
struct BranchSite {
  BranchId id = 0;
  std::string file;
  int line = 0;
  int column = 0;
  std::string condition;

  friend bool operator==(const BranchSite&, const BranchSite&) = default;
};

struct Manifest {
  std::vector<BranchSite> sites;
  FlipEnv env;
  std::filesystem::path instrumented_root;
  std::string tool_version;
  std::string shim_file = kShimName;

  const BranchSite* find(BranchId id) const;

  std::string to_json() const;
  static Manifest from_json(const std::string& text);
  static Manifest load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

struct ScanResult {
  std::vector<BranchSite> sites;
  BranchId next_id = 1;
};

/// Finds every `if (...)` outside comments, string/char literals and
/// preprocessor lines. Ids are assigned consecutively from `start_id`.
ScanResult scan_branch_sites(std::string_view source, const std::string& file,
                             BranchId start_id = 1);

/// The text that replaces a condition `C` of site `id`.
std::string guard_expression(std::string_view condition, BranchId id);

/// Wraps each site's condition in the flip guard. Every byte outside the
/// condition spans is copied unchanged.
std::string rewrite_source(std::string_view source, std::span<const BranchSite> sites);

/// Instruments every file under `root` matching one of `include_globs`.
/// Ids run 1..n across files in lexicographic path order. Originals are
/// copied under `<root>/.bfa-backup/`, the shim and manifest are written at
/// `root`. Nothing is written if any file fails to scan or rewrite.
Manifest instrument_tree(const std::filesystem::path& root,
                         const std::vector<std::string>& include_globs, const FlipEnv& env = {});

/// Writes the C runtime (`bfa_runtime.c`) and its prototype header into
/// `dir`; returns the path of the C file.
std::filesystem::path emit_runtime_shim(const std::filesystem::path& dir, const FlipEnv& env = {});

std::string runtime_shim_source(const FlipEnv& env);
std::string runtime_shim_header();

/// Glob over '/'-separated relative paths: `*` and `?` stay within one
/// segment, `**/` matches zero or more directories.
bool glob_match(std::string_view pattern, std::string_view path);

} // namespace bfa::instrument

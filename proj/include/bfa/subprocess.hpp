#pragma once

#include "bfa/flipcore.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace bfa {

struct ProcessResult {
  int exit_code = -1;
  std::string out;
  std::string err;
  double wall_ms = 0.0;
  bool timed_out = false;
};

struct ProcessSpec {
  std::vector<std::string> argv;
  Environment set_env;           // added to (or replacing in) the inherited environment
  std::vector<std::string> unset_env;
  std::filesystem::path workdir; // empty: inherit
  double timeout_s = 60.0;
};

/// Runs a child without a shell. The parent's environment is never modified;
/// overrides apply to the child only. A child still running at the timeout
/// is killed and reported with timed_out set.
ProcessResult run_process(const ProcessSpec& spec);

/// Splits a command template on whitespace; single or double quotes group
/// words. No other shell syntax is interpreted.
std::vector<std::string> split_command(std::string_view command);

} // namespace bfa

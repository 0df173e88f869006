#pragma once

#include <stdexcept>
#include <string>

namespace bfa {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Bad configuration: env values, config files, rule files, CLI arguments.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Malformed input text (coverage logs, CSV, explain output). Carries the
/// 1-based line when one applies, 0 otherwise.
class ParseError : public Error {
public:
  ParseError(const std::string& what, int line = 0) : Error(what), line_(line) {}
  int line() const { return line_; }

private:
  int line_;
};

class InstrumentError : public Error {
public:
  using Error::Error;
};

class TargetError : public Error {
public:
  TargetError(const std::string& what, int exit_code, std::string stderr_text)
      : Error(what), exit_code_(exit_code), stderr_(std::move(stderr_text)) {}
  int exit_code() const { return exit_code_; }
  const std::string& stderr_text() const { return stderr_; }

private:
  int exit_code_;
  std::string stderr_;
};

class Timeout : public Error {
public:
  using Error::Error;
};

class NondeterministicTarget : public Error {
public:
  using Error::Error;
};

} // namespace bfa

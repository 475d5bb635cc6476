#pragma once

#include <stdexcept>
#include <string>

namespace jobskill {

// Process exit codes used by the CLI.
enum class ExitCode : int { ok = 0, config = 2, data = 3, stage = 4 };

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const noexcept { return ExitCode::stage; }
};

// Unreadable files, unreachable crawl roots.
class IoError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::data; }
};

// Input that decodes but does not have the expected shape.
class SchemaError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::data; }
};

// Numerically or semantically invalid data (NaN in a matrix, empty vocabulary, ...).
class DataError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::data; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::config; }
};

// Broken internal contract between modules (unassigned label, empty cluster).
class LogicError : public Error {
 public:
  using Error::Error;
};

}  // namespace jobskill

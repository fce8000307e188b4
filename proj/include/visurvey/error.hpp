#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace visurvey {

/// Base for every error raised by the library. `code()` is a stable,
/// machine-readable identifier (e.g. "MISSING_FIELD"); `what()` is prose.
class Error : public std::runtime_error {
public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

private:
  std::string code_;
};

/// Failure to turn a document into a model. Syntax errors carry a 1-based
/// line/column; structural errors carry the document path instead.
class ParseError : public Error {
public:
  ParseError(std::string code, std::string path, const std::string& message,
             std::size_t line = 0, std::size_t column = 0)
      : Error(std::move(code), message), path_(std::move(path)), line_(line), column_(column) {}

  const std::string& path() const noexcept { return path_; }
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

private:
  std::string path_;
  std::size_t line_;
  std::size_t column_;
};

class CompileError : public Error {
  using Error::Error;
};

class SessionError : public Error {
  using Error::Error;
};

class ScheduleError : public Error {
  using Error::Error;
};

class StoreError : public Error {
  using Error::Error;
};

}  // namespace visurvey

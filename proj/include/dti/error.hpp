#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dti {

/// Base for every error the toolkit raises. The category decides the CLI exit code.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 2; }
  virtual const char* kind() const noexcept { return "runtime"; }
};

/// Bad input: malformed files, invalid configuration, violated preconditions.
class ValidationError : public Error {
public:
  using Error::Error;
  int exit_code() const noexcept override { return 1; }
  const char* kind() const noexcept override { return "validation"; }
};

/// Failure while processing otherwise valid inputs (divergence, empty coverage, network).
class DataError : public Error {
public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
  const char* kind() const noexcept override { return "data"; }
};

class IoError : public Error {
public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
  const char* kind() const noexcept override { return "io"; }
};

/// Syntax error in a text document, with 1-based line and column.
class ParseError : public ValidationError {
public:
  ParseError(std::string source, std::size_t line, std::size_t column, const std::string& what)
      : ValidationError(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + what),
        source_(std::move(source)), line_(line), column_(column) {}

  const std::string& source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

private:
  std::string source_;
  std::size_t line_;
  std::size_t column_;
};

}  // namespace dti

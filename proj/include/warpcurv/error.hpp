#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace warpcurv {

enum class ErrorCode {
  NonPositiveWarping,
  OutOfChart,
  SingularMetric,
  NumericalInstability,
  UnsupportedP,
  CaseMismatch,
  FiberNotEinstein,
  DimensionTooSmall,
  InvalidDimension,
  LengthMismatch,
  UnsupportedType,
  StepTooCoarse,
  ParseError,
  ConfigParseError,
  UnsupportedFormat,
  InvalidSpec,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Parse failure inside an expression string. column is 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t column, const std::string& what)
      : Error(ErrorCode::ParseError,
              "column " + std::to_string(column) + ": " + what),
        column_(column),
        message_(what) {}

  std::size_t column() const noexcept { return column_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::size_t column_;
  std::string message_;
};

// Scenario file failure; line and column are 1-based.
class ConfigParseError : public Error {
 public:
  ConfigParseError(std::size_t line, std::size_t column, const std::string& what)
      : Error(ErrorCode::ConfigParseError, "line " + std::to_string(line) + ", column " +
                                               std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace warpcurv

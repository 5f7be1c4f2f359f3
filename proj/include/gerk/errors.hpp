#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace gerk {

enum class ErrorKind {
  InvalidArgument,
  DimensionMismatch,
  ZeroMatrix,
  InvalidRank,
  FieldMismatch,
  NotASubgradient,
  TooManyColumns,
  OracleMismatch,
  NotConverged,
  MissingParameter,
  DegenerateNullspace,
  Parse,
  Io,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::ZeroMatrix: return "ZeroMatrix";
    case ErrorKind::InvalidRank: return "InvalidRank";
    case ErrorKind::FieldMismatch: return "FieldMismatch";
    case ErrorKind::NotASubgradient: return "NotASubgradient";
    case ErrorKind::TooManyColumns: return "TooManyColumns";
    case ErrorKind::OracleMismatch: return "OracleMismatch";
    case ErrorKind::NotConverged: return "NotConverged";
    case ErrorKind::MissingParameter: return "MissingParameter";
    case ErrorKind::DegenerateNullspace: return "DegenerateNullspace";
    case ErrorKind::Parse: return "Parse";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

/// Base exception for everything thrown by the library. The kind is what
/// callers (the CLI in particular) dispatch on.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Malformed input file; carries the 1-based line of the offending text.
class ParseError : public Error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& msg)
      : Error(ErrorKind::Parse,
              file + ":" + std::to_string(line) + ": " + msg),
        file_(file),
        line_(line) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

}  // namespace gerk

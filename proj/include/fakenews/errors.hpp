#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fakenews {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Incompatible tensor shapes.
struct DimensionError : Error {
  using Error::Error;
};

/// An index (token id, class label, element) outside its valid range.
struct IndexError : Error {
  using Error::Error;
};

/// A caller broke an operation's precondition (non-scalar loss, double backward, ...).
struct ContractError : Error {
  using Error::Error;
};

struct ParseError : Error {
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Malformed binary input; carries the byte offset where reading failed.
struct FormatError : Error {
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// The function under a finite-difference check is not deterministic.
struct OracleInvalidError : Error {
  using Error::Error;
};

struct TrainingError : Error {
  using Error::Error;
};

struct CheckpointError : Error {
  using Error::Error;
};

}  // namespace fakenews

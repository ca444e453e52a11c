#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nasbo {

/// Base class for every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. `line` is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what);

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Well-formed input that violates a domain invariant.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Failure to factor a kernel matrix even after jitter escalation.
class GPFitError : public Error {
 public:
  using Error::Error;
};

class OracleError : public Error {
 public:
  enum class Kind { Miss, Timeout, ExitStatus, Malformed, IdMismatch, NonFinite, Spawn };

  OracleError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

}  // namespace nasbo

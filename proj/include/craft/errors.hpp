#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace craft {

/// Base class for every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. Carries the 1-based line number when known (0 otherwise).
class ParseError : public Error {
 public:
  ParseError(std::string file, std::size_t line, const std::string& what)
      : Error(file + (line ? ":" + std::to_string(line) : std::string()) + ": " + what),
        file_(std::move(file)),
        line_(line) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

/// A value outside its domain (weight not in {1,2,3}, lambda outside [0,1], ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The embedding provider failed or returned something unusable.
class ProviderError : public Error {
 public:
  using Error::Error;
};

/// The provider's vector dimension changed in the middle of a run.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Input data defects that abort a run (strict validation, missing vectors).
class DataError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace craft

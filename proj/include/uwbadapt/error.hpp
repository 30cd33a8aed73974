#pragma once

#include <stdexcept>
#include <string>

namespace uwbadapt {

/// Base of every error thrown by the library. The CLI maps each subclass
/// to its own exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument or configuration value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input file does not follow the expected schema.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& what, std::size_t line = 0)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A computation produced or received a value outside its domain
/// (log of zero, non-finite loss, ...).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace uwbadapt

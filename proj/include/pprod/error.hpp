#pragma once

#include <stdexcept>
#include <string>

namespace pprod {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  DimensionMismatch(const std::string& where, long expected, long got)
      : Error(where + ": dimension mismatch (expected " + std::to_string(expected) +
              ", got " + std::to_string(got) + ")") {}
};

class NonFiniteInput : public Error {
 public:
  explicit NonFiniteInput(const std::string& where) : Error(where + ": non-finite input entry") {}
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A checker or operation was called on inputs that violate its precondition.
class PreconditionViolated : public Error {
 public:
  using Error::Error;
};

/// Schedule emitted a label the projector family cannot serve.
class UnknownLabel : public Error {
 public:
  explicit UnknownLabel(long label) : Error("no projector for label " + std::to_string(label)) {}
};

/// Scenario configuration problem; `path` is the JSON pointer of the field.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : Error("config error at " + (path.empty() ? std::string("/") : path) + ": " + what), path_(path) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace pprod

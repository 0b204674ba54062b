#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fpv {

/// Base class of every error thrown by the library. `exit_code()` is the
/// process exit status the command-line front end maps the error to.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 1; }
};

class ParseError : public Error {
public:
  ParseError(const std::string &what, std::size_t line, std::size_t column)
      : Error(what + " at line " + std::to_string(line) + ", column " +
              std::to_string(column)),
        line_(line), column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

private:
  std::size_t line_;
  std::size_t column_;
};

class UnsupportedRequirement : public Error {
public:
  explicit UnsupportedRequirement(const std::string &tag, std::size_t line = 0,
                                  std::size_t column = 0)
      : Error("unsupported requirement " + tag +
              (line ? " at line " + std::to_string(line) + ", column " +
                          std::to_string(column)
                    : std::string())),
        tag_(tag) {}
  const std::string &tag() const noexcept { return tag_; }

private:
  std::string tag_;
};

/// Semantic problems in otherwise well-formed PDDL: undeclared names, arity
/// mismatches, duplicate schemas.
class ValidationError : public Error {
public:
  using Error::Error;
};

class GroundingError : public Error {
public:
  using Error::Error;
};

class UnknownId : public Error {
public:
  using Error::Error;
};

class LengthMismatch : public Error {
public:
  LengthMismatch(std::size_t lhs, std::size_t rhs)
      : Error("vector length mismatch: " + std::to_string(lhs) + " vs " +
              std::to_string(rhs)) {}
};

class InapplicableAction : public Error {
public:
  using Error::Error;
};

class UnsupportedFact : public Error {
public:
  using Error::Error;
};

class InsufficientSamples : public Error {
public:
  using Error::Error;
};

class UnreachableGoal : public Error {
public:
  using Error::Error;
};

/// Raised when exhaustive search would exceed its configured state budget.
class CapExceeded : public Error {
public:
  explicit CapExceeded(std::size_t cap)
      : Error("state cap exceeded: more than " + std::to_string(cap) +
              " expanded states"),
        cap_(cap) {}
  int exit_code() const noexcept override { return 2; }
  std::size_t cap() const noexcept { return cap_; }

private:
  std::size_t cap_;
};

class InstanceError : public Error {
public:
  using Error::Error;
};

} // namespace fpv

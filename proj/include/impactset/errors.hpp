#pragma once

#include <stdexcept>
#include <string>

namespace impactset {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Mass matrix is not symmetric positive definite.
class NotSpdError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent dimensions between a problem and its inputs.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A solver was asked to resolve an impact from a non-impacting state.
class NotPenetratingError : public Error {
 public:
  using Error::Error;
};

/// No contact is eligible to receive impulse at the queried state.
class NoActiveContactError : public Error {
 public:
  using Error::Error;
};

/// A solver exceeded its termination safeguard.
class NonTerminationError : public Error {
 public:
  using Error::Error;
};

/// A sampling procedure could not find any penetrating velocity.
class EmptyActiveSetError : public Error {
 public:
  using Error::Error;
};

/// Malformed scene file or configuration string.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& field, const std::string& reason)
      : Error("schema error at '" + field + "': " + reason),
        field_(field),
        reason_(reason) {}

  const std::string& field() const { return field_; }
  const std::string& reason() const { return reason_; }

 private:
  std::string field_;
  std::string reason_;
};

/// Unreachable state; indicates a bug in the library itself.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace impactset

#pragma once

#include <stdexcept>
#include <string>

namespace qkdlab {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree (matrix sizes, subsystem indices, ...).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A construction would exceed the dense-storage cap.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// A value violates a domain invariant (not Hermitian, not unit trace, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Two independent numerical routes disagree beyond tolerance.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Invalid protocol/search configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed composition tree (cycle, shared child, dangling parent).
class TreeError : public Error {
 public:
  using Error::Error;
};

}  // namespace qkdlab

#pragma once

#include <stdexcept>
#include <string>

namespace dvcover {

/// Bad user input: parameters out of range, malformed specs, broken invariants.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class PreconditionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A computation that refuses to return a number it cannot stand behind.
class InconclusiveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dvcover

#pragma once

#include <stdexcept>
#include <string>

namespace ose {

// Base of every error raised by the library. The CLI maps subclasses to exit
// codes, so new error kinds should derive from the closest existing one.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed documents, unknown variable names, unsupported layer kinds.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// A search space that is empty or otherwise unusable.
class InvalidSpaceError : public Error {
 public:
  using Error::Error;
};

// Enumeration or oracle work exceeding a configured cap.
class SizeError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Non-finite values during evaluation or differentiation.
class NumericError : public Error {
 public:
  using Error::Error;
};

// A polynomial that should evaluate to an integer did not.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

class LossContractError : public Error {
 public:
  using Error::Error;
};

// A candidate exceeds the maximum point in size or inference cost.
class DominationError : public Error {
 public:
  using Error::Error;
};

// Dataset or CSV content that cannot be parsed.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace ose

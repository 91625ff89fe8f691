#pragma once

#include <stdexcept>
#include <string>

namespace aeb {

// Base for every error raised by the library. Callers that only need to
// distinguish "bad input" from programming errors can catch this one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input document does not match the expected schema. The message names the
// offending field and its location.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// A speed range cannot be walked with the declared step.
class LatticeError : public SchemaError {
 public:
  using SchemaError::SchemaError;
};

// A filter or lookup named a scenario, group or vehicle that does not exist.
class UnknownKeyError : public Error {
 public:
  using Error::Error;
};

// An oracle produced an outcome that violates the outcome invariants.
class OutcomeError : public Error {
 public:
  using Error::Error;
};

class ScoringError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace aeb

#pragma once

#include <stdexcept>
#include <string>

namespace qie {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition or validation failure on caller-supplied values.
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

/// Filesystem problem (missing file, unwritable directory, ...).
class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed file content (bad CSV cell, bad JSON, ...).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Content is well formed but does not match the declared schema
/// (unknown label value, missing column, unknown config key, ...).
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Operation would exceed a configured resource budget.
class FeasibilityError : public Error {
 public:
  using Error::Error;
};

/// API misuse, e.g. transforming with an unfitted map.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace qie

#pragma once

#include <stdexcept>
#include <string>

namespace ctxrec {

// Base class for every error the engine reports. Subclasses map onto the
// service layer's machine codes (see api.cpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unknown document id.
class NotFoundError : public Error {
 public:
  using Error::Error;
};

// Context label outside the configured ContextSet.
class UnknownContextError : public Error {
 public:
  using Error::Error;
};

// Violated precondition or malformed query/argument.
class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

// Malformed, inconsistent or corrupt input/persisted files.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace ctxrec

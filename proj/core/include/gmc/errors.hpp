#pragma once

#include <stdexcept>
#include <string>

namespace gmc {

// Every failure raised by the library derives from gmc::Error so callers can
// catch the whole family; the subclasses mirror the error categories the
// runner reports (domain, range, validation, numeric, resource, usage).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class ResourceError : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

// Raised when a classification cannot be decided from the information given
// (e.g. a tabulated envelope without a tail model).
class InconclusiveError : public Error {
 public:
  using Error::Error;
};

}  // namespace gmc

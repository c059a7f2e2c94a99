#pragma once

#include <stdexcept>
#include <string>

namespace projdebias {

/// Raised when a computation cannot proceed (bad shapes, rank, invalid config).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for malformed or unreadable input files. The CLI maps it to exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

}  // namespace projdebias

#pragma once

#include <stdexcept>
#include <string>

namespace frailcomp {

// Exception categories map one-to-one onto the C API status codes and the
// CLI exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace frailcomp

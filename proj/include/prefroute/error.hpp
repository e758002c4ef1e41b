#pragma once

#include <stdexcept>
#include <string>

namespace prefroute {

// Base for every error the library raises. The CLI maps the subclasses onto
// exit codes (config 2, data 3, numerical 4).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// Raised when code without evaluation rights asks for full-information rows.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

}  // namespace prefroute

#pragma once

#include <stdexcept>
#include <string>

namespace blowup {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Evaluation outside the domain of definition (e.g. fractional power of a
/// negative base).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Query outside the supported range of an object (e.g. t >= T0).
class RangeError : public Error {
 public:
  using Error::Error;
};

/// An iterative or linear solve did not meet its tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// The integral defining a blow-up time does not converge.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string msg, int line = -1, std::string key = {})
      : Error(std::move(msg)), line_(line), key_(std::move(key)) {}
  int line() const { return line_; }
  const std::string& key() const { return key_; }

 private:
  int line_;
  std::string key_;
};

}  // namespace blowup

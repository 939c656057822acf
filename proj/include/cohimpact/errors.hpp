#pragma once

#include <stdexcept>
#include <string>

namespace cohimpact {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape mismatch between operators, or a non-square matrix.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Eigensolver / integrator failure or a tolerance breach.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Restricted generator is not strictly stable, so a resolvent does not exist.
class StabilityError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class PurityError : public Error {
 public:
  using Error::Error;
};

class StateError : public Error {
 public:
  using Error::Error;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  using Error::Error;
};

}  // namespace cohimpact

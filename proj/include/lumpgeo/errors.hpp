#pragma once

#include <stdexcept>
#include <string>

namespace lumpgeo {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-range input (bad sizes, invalid distributions, parse failures).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

class IrreducibilityError : public Error {
 public:
  using Error::Error;
};

/// An iterative method ran out of budget. `residual` is the last measured residual.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual(residual) {}
  double residual;
};

class AbsoluteContinuityError : public Error {
 public:
  using Error::Error;
};

/// Kernel fails lumpability. Carries the worst violating pair of states.
class LumpabilityError : public Error {
 public:
  LumpabilityError(const std::string& what, double violation, int x, int x2, int y1,
                   int y2)
      : Error(what), violation(violation), x(x), x2(x2), y1(y1), y2(y2) {}
  double violation;
  int x, x2, y1, y2;
};

class CompatibilityError : public Error {
 public:
  using Error::Error;
};

/// Input outside the domain of an operation (support mismatch, nonpositive mixture).
class DomainError : public Error {
 public:
  using Error::Error;
};

class InvalidEdgeMeasure : public Error {
 public:
  using Error::Error;
};

class InvalidFamily : public Error {
 public:
  using Error::Error;
};

class OptimizationError : public Error {
 public:
  using Error::Error;
};

/// The optimizer produced a certificate that no kernel satisfies the constraints.
class InfeasibleConstraints : public OptimizationError {
 public:
  using OptimizationError::OptimizationError;
};

}  // namespace lumpgeo

#pragma once

#include <stdexcept>
#include <string>

namespace conjlab {

/// Base class for all conjlab failures.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Integrator ran out of its step budget before reaching the end time.
class StepBudgetExceeded : public Error {
 public:
  using Error::Error;
};

/// A state component became NaN or infinite during integration.
class NonFiniteState : public Error {
 public:
  using Error::Error;
};

/// Adaptive quadrature exhausted its refinement budget.
class ToleranceNotMet : public Error {
 public:
  using Error::Error;
};

/// Picard iteration hit its iteration cap without contracting below tol_fix.
class NoConvergence : public Error {
 public:
  using Error::Error;
};

/// A Jacobian was requested but none is available (r = 0, FD fallback off).
class MissingJacobian : public Error {
 public:
  using Error::Error;
};

/// Scenario text failed to parse; message carries line/column.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int column)
      : Error(what + " (line " + std::to_string(line) + ", col " +
              std::to_string(column) + ")"),
        line_(line),
        column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// A certified constant violates its hypothesis (e.g. K*gamma/alpha >= 1).
class CertificateRejected : public Error {
 public:
  using Error::Error;
};

/// Newton solve for an equilibrium failed to converge.
class NewtonDiverged : public Error {
 public:
  using Error::Error;
};

}  // namespace conjlab

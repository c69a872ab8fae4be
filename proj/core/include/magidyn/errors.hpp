#pragma once

#include <stdexcept>
#include <string>

namespace magidyn {

// Base class for every error raised by the library. The CLI maps the
// subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller supplied inputs that violate a documented precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// rho_critical is undefined when sigma - beta - 1 == 0.
class DegenerateDenominator : public Error {
 public:
  using Error::Error;
};

// The adaptive integrator could not meet its tolerance (stiffness or blow-up).
class StepSizeUnderflow : public Error {
 public:
  using Error::Error;
};

// d_obs * T_max is not an integer, or an observation grid is unevenly spaced.
class InvalidGrid : public Error {
 public:
  using Error::Error;
};

// The jitter ladder was exhausted without a successful Cholesky factorization.
class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

// Every multi-start of the hyperparameter search failed.
class FitFailed : public Error {
 public:
  using Error::Error;
};

// A leapfrog intermediate became non-finite.
class NonFiniteState : public Error {
 public:
  using Error::Error;
};

// Reading or writing a data file failed.
class IoError : public Error {
 public:
  using Error::Error;
};

// A data file was readable but malformed. Carries 1-based line/column context.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error(what + " (line " + std::to_string(line) + ", column " +
              std::to_string(column) + ")"),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

// The pilot window holds too few observations to fit hyperparameters.
class PilotTooShort : public Error {
 public:
  using Error::Error;
};

}  // namespace magidyn

#ifndef STM_ERRORS_HPP
#define STM_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stm {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid argument to a sampling or pmf primitive (negative rate, bad
/// probability vector, ...).
struct DomainError : Error {
  using Error::Error;
};

/// An event set would drive a compartment count below zero.
struct NegativeStateError : Error {
  using Error::Error;
};

/// A rate function returned negative, non-finite or wrong-length output.
struct InvalidRateError : Error {
  using Error::Error;
};

/// Event data whose shape does not match the model.
struct ShapeError : Error {
  using Error::Error;
};

/// Competing hazards made a transition-matrix diagonal negative; the time
/// step is too large for the one-transition-per-step assumption.
struct ProbabilityOverflowError : Error {
  using Error::Error;
};

/// ODE state became NaN or infinite during integration.
struct NonFiniteStateError : Error {
  using Error::Error;
};

/// Objective was non-finite at the initial simplex.
struct NonFiniteObjectiveError : Error {
  using Error::Error;
};

/// Model definition violates a structural invariant.
struct ValidationError : Error {
  using Error::Error;
};

/// Syntax error in an expression or model file; carries source position.
struct ParseError : Error {
  ParseError(const std::string& msg, std::size_t line, std::size_t column)
      : Error("line " + std::to_string(line) + ", column " +
              std::to_string(column) + ": " + msg),
        line(line),
        column(column) {}
  std::size_t line;
  std::size_t column;
};

/// An identifier in an expression does not resolve to a parameter,
/// compartment, array, or builtin.
struct UnknownIdentifierError : ParseError {
  using ParseError::ParseError;
};

/// Runtime failure while evaluating a rate expression.
struct EvalError : Error {
  using Error::Error;
};

}  // namespace stm

#endif

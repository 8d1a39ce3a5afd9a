#pragma once

#include <stdexcept>
#include <string>

namespace pendrot {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Non-physical or malformed input (non-positive mass, zero winding, ...).
class InvalidParameter : public Error {
public:
  using Error::Error;
};

/// A hypothesis of a multiplicity statement does not hold (N0 out of range,
/// infeasible period window, ...).
class HypothesisViolation : public Error {
public:
  using Error::Error;
};

/// An internal consistency check failed. Indicates a bug, never bad input.
class InternalError : public Error {
public:
  using Error::Error;
};

} // namespace pendrot

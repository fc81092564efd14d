#pragma once

#include <stdexcept>

namespace kasfc {

/// Input lies outside the domain an operation is defined on (e.g. x > 1).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Malformed parameter: bad base, mismatched lengths, non-divisible code length.
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Request exceeds the exact-arithmetic or unit budget.
struct CapacityError : std::length_error {
  using std::length_error::length_error;
};

/// A ternary code contains the digit 1 and so is not a Cantor-set point.
struct NotCantorPointError : DomainError {
  using DomainError::DomainError;
};

/// Vector or matrix shape does not match a network's architecture.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace kasfc

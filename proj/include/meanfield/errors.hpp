#pragma once

#include <stdexcept>
#include <string>

namespace meanfield {

/// Invalid input: bad configuration, precondition violation, unknown flag.
/// The CLI maps it to exit status 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A method is not defined for the given input (e.g. the K=2 closed form on
/// a three-group population).
class NotApplicableError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Numerical failure: overflow, blowup, non-convergent refinement.
/// The CLI maps it to exit status 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace meanfield

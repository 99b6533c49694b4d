#pragma once

#include <stdexcept>
#include <string>

namespace fqw {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad arguments, violated preconditions, malformed config. CLI exit code 2.
struct InvalidInput : Error {
  using Error::Error;
};

// Requested work exceeds the configured budget. CLI exit code 3.
struct BudgetError : Error {
  using Error::Error;
};

// A theorem hypothesis required by the requested computation fails on the
// given data. CLI exit code 4.
struct HypothesisViolation : Error {
  using Error::Error;
};

// Numerical classification could not separate nearby values at the requested
// tolerance (eigenvalue clustering, unit-circle classification).
struct AmbiguityError : Error {
  using Error::Error;
};

}  // namespace fqw

#pragma once

#include <stdexcept>
#include <string>

namespace stopflow {

/// Raised when inputs violate a documented precondition or invariant.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical routine cannot deliver its contract
/// (no bracketing sign change, non-converging quadrature, ...).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised on file-system or format problems.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace stopflow

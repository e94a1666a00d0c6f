#pragma once

#include <stdexcept>
#include <string>

namespace exc {

// Input outside the mathematical domain of an operation (nonpositive y,
// |J| > dim, t < k, ...).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Model parameters violate their constraints (non-PD covariance, simplex,
// asymmetric-logistic mass balance, ...).
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A numerical procedure did not deliver (bracketing failure, log-space
// overflow, rejection sampler exhausted).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace exc

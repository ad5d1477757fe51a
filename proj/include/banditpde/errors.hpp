#pragma once

#include <stdexcept>
#include <string>

namespace banditpde {

// Base error. ConfigError maps to CLI exit code 2, NumericalError to 3.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct NumericalError : Error {
    using Error::Error;
};

// Explicit scheme stepped with dt above the stability bound.
struct CflViolation : NumericalError {
    using NumericalError::NumericalError;
};

// Policy iteration failed to settle within the iteration cap.
struct HowardNonconvergence : NumericalError {
    using NumericalError::NumericalError;
};

// A linear solve hit a zero pivot or failed to reach its residual target.
struct SingularSystem : NumericalError {
    using NumericalError::NumericalError;
};

// Gaussian mu_max is limited to K <= 3 (tensorized quadrature cost).
struct UnsupportedK : ConfigError {
    using ConfigError::ConfigError;
};

// Bernoulli reward family requires |mu|/sqrt(n) <= 1.
struct InvalidMu : Error {
    using Error::Error;
};

// State fell outside the grid while clamping was disabled.
struct OutOfGrid : Error {
    using Error::Error;
};

// Frequentist risk profile had no local maximum on one side of zero.
struct NoNegativePeak : NumericalError {
    using NumericalError::NumericalError;
};
struct NoPositivePeak : NumericalError {
    using NumericalError::NumericalError;
};

// PDE risk evaluation requested for a discontinuous policy (e.g. UCB).
struct UnsupportedPdeEval : ConfigError {
    using ConfigError::ConfigError;
};

}  // namespace banditpde

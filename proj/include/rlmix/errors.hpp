#pragma once

#include <stdexcept>
#include <string>

namespace rlmix {

// Base class for everything thrown by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid parameters, preconditions, or malformed configs (CLI exit code 2).
struct ParameterError : Error {
    using Error::Error;
};

struct SingularParameterError : ParameterError {
    using ParameterError::ParameterError;
};

struct ConfigError : ParameterError {
    using ParameterError::ParameterError;
};

struct PreconditionError : ParameterError {
    using ParameterError::ParameterError;
};

struct DegenerateInputError : ParameterError {
    using ParameterError::ParameterError;
};

// Numerical failures: eigensolver non-convergence, defective bases,
// step-size underflow (CLI exit code 3).
struct NumericalError : Error {
    using Error::Error;
};

struct SolverError : NumericalError {
    using NumericalError::NumericalError;
};

struct ConditioningError : NumericalError {
    using NumericalError::NumericalError;
};

struct StiffnessError : NumericalError {
    using NumericalError::NumericalError;
};

// Horizon exhaustion or infeasible requests (CLI exit code 4).
struct InfeasibilityError : Error {
    using Error::Error;
};

struct HorizonTooShortError : InfeasibilityError {
    using InfeasibilityError::InfeasibilityError;
};

struct NoDarkStateError : InfeasibilityError {
    using InfeasibilityError::InfeasibilityError;
};

struct InfeasibleRecipeError : InfeasibilityError {
    using InfeasibilityError::InfeasibilityError;
};

} // namespace rlmix

#pragma once

#include <stdexcept>
#include <string>

namespace owi {

// Base class for all library errors.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Anything wrong with user-supplied configuration or parameters: bad units,
// unknown keys, invariant violations. The CLI maps these to exit code 1.
struct config_error : error {
    using error::error;
};

// A parameter set or state that violates a documented invariant (a flavor of
// configuration error; the first offending field is named in the message).
struct validation_error : config_error {
    using config_error::config_error;
};

// Numerical failure inside a solver: step-size underflow, singular or
// near-singular steady-state system. The CLI maps these to exit code 2.
struct solver_error : error {
    using error::error;
};

} // namespace owi

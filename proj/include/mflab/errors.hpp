#pragma once

#include <stdexcept>
#include <string>

namespace mflab {

// Invalid or inconsistent user configuration. Messages name the offending key.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure: quadrature non-convergence, unstable step, blow-up guard.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// Structural mismatch between objects that must share grids/time axes/samples.
struct StructureError : std::runtime_error {
    explicit StructureError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace mflab

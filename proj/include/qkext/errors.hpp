#pragma once

#include <stdexcept>
#include <string>

namespace qkext {

// Rejected inputs and violated preconditions. The CLI maps these to exit code 1.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what_arg) : std::runtime_error(what_arg) {}
};

// Failures of the numerics themselves (non-convergence, degenerate denominators).
// The CLI maps these to exit code 2.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what_arg) : std::runtime_error(what_arg) {}
};

} // namespace qkext

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace difflim {

/// Bad sizes, mismatched shapes, out-of-range parameters.
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Data or configuration that violates a modelling assumption.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// (I-K)u = f has no solution because f has nonzero velocity average.
class SolvabilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A scattering operator or diffusion tensor failed its assumption checks.
class CertificationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Source iteration did not reach the requested tolerance.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, std::vector<double> residuals)
        : std::runtime_error(what), residuals_(std::move(residuals)) {}

    const std::vector<double>& residuals() const noexcept { return residuals_; }

private:
    std::vector<double> residuals_;
};

}  // namespace difflim

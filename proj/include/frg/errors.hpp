#pragma once

#include <stdexcept>
#include <string>

namespace frg {

// Configuration / argument problems: CLI maps these to exit code 2.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// Numerical failures (factorization breakdown, singular systems, overflow,
// non-finite state): CLI maps these to exit code 3.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Step-size underflow or exceeded step budget in the adaptive integrator.
class IntegrationFailure : public NumericalError {
public:
    IntegrationFailure(const std::string& what, double last_good_t)
        : NumericalError(what), last_good(last_good_t) {}
    double last_good;
};

// The LPA denominator kappa^2 + U'' crossed zero.
class FlowSingularity : public NumericalError {
public:
    FlowSingularity(const std::string& what, double kappa_, double phi_)
        : NumericalError(what), kappa(kappa_), phi(phi_) {}
    double kappa;
    double phi;
};

// Newton iteration for an observable failed to converge.
class RootFailure : public NumericalError {
public:
    explicit RootFailure(const std::string& what) : NumericalError(what) {}
};

}  // namespace frg

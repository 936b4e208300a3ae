#pragma once

#include <stdexcept>
#include <string>

namespace mexp {

/// Input outside the mathematical domain of an operation (CLI exit code 2).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Moment at or beyond the critical moment.
class ExplosionError : public DomainError {
public:
    ExplosionError(const std::string& what, double mu_star)
        : DomainError(what), mu_star_(mu_star) {}
    double mu_star() const { return mu_star_; }

private:
    double mu_star_;
};

/// Query below the smallest tilt level for which the conjugate root exists.
class RangeError : public DomainError {
public:
    RangeError(const std::string& what, double lo, double hi)
        : DomainError(what), lo_(lo), hi_(hi) {}
    double lo() const { return lo_; }
    double hi() const { return hi_; }

private:
    double lo_, hi_;
};

/// Iteration, quadrature or series failed to converge (CLI exit code 3).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Request exceeds a fixed resource cap.
class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace mexp

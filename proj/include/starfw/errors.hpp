#pragma once

#include <stdexcept>
#include <string>

namespace starfw {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

/// Non-finite or otherwise invalid numeric input.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Gradient requested at a point where the objective is not differentiable.
class SingularityError : public Error {
public:
    using Error::Error;
};

/// Operation not supported by this object (e.g. Hessian of a distance sum).
class CapabilityError : public Error {
public:
    using Error::Error;
};

/// Malformed JSON spec or configuration; the message names the offending key.
class SpecError : public Error {
public:
    using Error::Error;
};

/// Backtracking (Armijo) or doubling (adaptive Lipschitz) ran out of trials.
class LineSearchFailure : public Error {
public:
    LineSearchFailure(const std::string& what, double last_lambda)
        : Error(what), last_lambda_(last_lambda) {}

    double last_lambda() const noexcept { return last_lambda_; }

private:
    double last_lambda_;
};

namespace detail {

inline void require_dim(long got, long expected, const char* what)
{
    if (got != expected) {
        throw DimensionError(std::string(what) + ": dimension mismatch (got " +
                             std::to_string(got) + ", expected " +
                             std::to_string(expected) + ")");
    }
}

} // namespace detail
} // namespace starfw

#pragma once

#include <stdexcept>
#include <string>

namespace fmamm {

/// Input that violates a documented precondition (bad file, bad row, bad parameter).
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A trade or price outside the domain of a pricing rule (e.g. past the price pole).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// An iterative solver ran out of budget or could not bracket a root.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace fmamm

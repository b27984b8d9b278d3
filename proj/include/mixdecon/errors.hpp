#pragma once

#include <stdexcept>
#include <string>

namespace mixdecon {

// Inputs that do not fit together (mismatched grids, wrong domain tags).
class StructuralError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Parameter values outside the admissible range.
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Operation not defined for the given model variant.
class UnsupportedVariant : public DomainError {
public:
    using DomainError::DomainError;
};

// Transfer function vanishes inside the kernel band; use the regularized filter.
class MustRegularize : public DomainError {
public:
    using DomainError::DomainError;
};

// Floating point failure: overflow, underflow to zero, non-convergence.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace mixdecon

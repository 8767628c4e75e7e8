#pragma once

#include <stdexcept>
#include <string>

namespace randscen {

// Misordered or out-of-range arguments (caller bug, CLI exit 1).
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// No design satisfies the requested confidence levels for the given m.
class InfeasibleDesign : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Iterative solver hit its cap or a linear solve was singular.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A search gave up (e.g. sample size beyond the supported limit).
class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raised by validation checks that ran to completion but did not pass.
class ValidationFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace randscen

#pragma once

#include <stdexcept>
#include <string>

namespace qmap {

// Input that violates a documented invariant (odd chain length, kappa <= 0, ...).
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Problem size beyond what the dense/blocked eigensolvers are configured for.
class CapacityError : public std::length_error {
public:
    using std::length_error::length_error;
};

// Internally inconsistent request, e.g. a linear form that references an
// operator slot that was never registered.
class StructuralError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace qmap

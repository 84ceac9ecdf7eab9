#pragma once

#include <stdexcept>
#include <string>

namespace cascade {

/// Argument outside the mathematical domain of a routine.
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

/// State that violates 0 <= |p|^2 < xc or has a negative amplitude square.
struct AdmissibilityError : std::domain_error {
    using std::domain_error::domain_error;
};

/// Resonance or index preconditions broken by the caller.
struct ContractViolation : std::logic_error {
    using std::logic_error::logic_error;
};

/// Adaptive step shrank below the configured minimum.
struct StepUnderflow : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed configuration or CLI input.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace cascade

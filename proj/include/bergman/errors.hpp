#pragma once

#include <stdexcept>
#include <string>

namespace bergman {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define BERGMAN_ERROR(Name)                  \
    class Name : public Error {              \
    public:                                  \
        using Error::Error;                  \
    }

BERGMAN_ERROR(DomainError);
BERGMAN_ERROR(BudgetExceeded);
BERGMAN_ERROR(QuadratureNotConverged);
BERGMAN_ERROR(GramSingular);
BERGMAN_ERROR(HypothesisViolated);
BERGMAN_ERROR(KernelVanishes);
BERGMAN_ERROR(FirstCoefficientZero);
BERGMAN_ERROR(NearDiagonal);
BERGMAN_ERROR(FrameJumpDetected);
BERGMAN_ERROR(InsufficientData);
BERGMAN_ERROR(ConfigError);

#undef BERGMAN_ERROR

}  // namespace bergman

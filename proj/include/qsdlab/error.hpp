#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qsd {

enum class ErrorKind {
    // model validation
    NegativeOffDiagonal,
    PositiveRowSum,
    NoKilling,
    Reducible,
    InvalidRates,
    ParseError,
    ValidationError,
    InvalidArgument,
    // numerical
    DegenerateGap,
    ZeroEta,
    SingularSolve,
    OverflowGuard,
    BudgetExceeded,
    DegenerateVariance,
};

std::string_view to_string(ErrorKind kind);

/// True for errors raised by numerical routines (as opposed to rejected input).
bool is_numerical(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace qsd

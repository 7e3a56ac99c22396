#include "qsdlab/error.hpp"

namespace qsd {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::NegativeOffDiagonal: return "NegativeOffDiagonal";
        case ErrorKind::PositiveRowSum: return "PositiveRowSum";
        case ErrorKind::NoKilling: return "NoKilling";
        case ErrorKind::Reducible: return "Reducible";
        case ErrorKind::InvalidRates: return "InvalidRates";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::ValidationError: return "ValidationError";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::DegenerateGap: return "DegenerateGap";
        case ErrorKind::ZeroEta: return "ZeroEta";
        case ErrorKind::SingularSolve: return "SingularSolve";
        case ErrorKind::OverflowGuard: return "OverflowGuard";
        case ErrorKind::BudgetExceeded: return "BudgetExceeded";
        case ErrorKind::DegenerateVariance: return "DegenerateVariance";
    }
    return "Unknown";
}

bool is_numerical(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::DegenerateGap:
        case ErrorKind::ZeroEta:
        case ErrorKind::SingularSolve:
        case ErrorKind::OverflowGuard:
        case ErrorKind::BudgetExceeded:
        case ErrorKind::DegenerateVariance:
            return true;
        default:
            return false;
    }
}

}  // namespace qsd

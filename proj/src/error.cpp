#include "rapm/error.hpp"

namespace rapm {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidParameter: return "InvalidParameter";
        case ErrorCode::ExistenceViolationA: return "ExistenceViolation(A)";
        case ErrorCode::ExistenceViolationB: return "ExistenceViolation(B)";
        case ErrorCode::NonpositiveSpot: return "NonpositiveSpot";
        case ErrorCode::DegenerateSwitch: return "DegenerateSwitch";
        case ErrorCode::InvalidSpacing: return "InvalidSpacing";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::InvalidSize: return "InvalidSize";
        case ErrorCode::SingularMass: return "SingularMass";
        case ErrorCode::LinearSolveFailure: return "LinearSolveFailure";
        case ErrorCode::NonFiniteState: return "NonFiniteState";
        case ErrorCode::SpotOutOfDomain: return "SpotOutOfDomain";
    }
    return "Unknown";
}

}  // namespace rapm

#include "core/error.hpp"

namespace rtlab {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::Ok: return "Ok";
        case ErrorCode::BadSpec: return "BadSpec";
        case ErrorCode::NonPositiveDensity: return "NonPositiveDensity";
        case ErrorCode::SingularForms: return "SingularForms";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::DegenerateMode: return "DegenerateMode";
        case ErrorCode::IncompatibleDivergence: return "IncompatibleDivergence";
        case ErrorCode::SolverFailure: return "SolverFailure";
        case ErrorCode::DensityUnderflow: return "DensityUnderflow";
        case ErrorCode::NotContracting: return "NotContracting";
        case ErrorCode::CflViolation: return "CflViolation";
        case ErrorCode::NeverEscapes: return "NeverEscapes";
        case ErrorCode::RegimeViolation: return "RegimeViolation";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::Internal: return "Internal";
    }
    return "Unknown";
}

} // namespace rtlab

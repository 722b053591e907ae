#include "wlc/errors.hpp"

namespace wlc {

std::string_view error_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::StepUnstable: return "StepUnstable";
        case ErrorCode::DegenerateSteadyState: return "DegenerateSteadyState";
        case ErrorCode::SingularLinearSystem: return "SingularLinearSystem";
        case ErrorCode::CflViolation: return "CflViolation";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::NoPeak: return "NoPeak";
        case ErrorCode::ZeroEntryAmplitude: return "ZeroEntryAmplitude";
        case ErrorCode::IllConditionedFit: return "IllConditionedFit";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::AboveLasingThreshold: return "AboveLasingThreshold";
        case ErrorCode::NoHalfCrossing: return "NoHalfCrossing";
        case ErrorCode::InsufficientGroupIndex: return "InsufficientGroupIndex";
        case ErrorCode::NonpositiveCubicTerm: return "NonpositiveCubicTerm";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

bool is_validation_error(ErrorCode code) noexcept {
    return code == ErrorCode::InvalidArgument || code == ErrorCode::ConfigError ||
           code == ErrorCode::IoError;
}

}  // namespace wlc

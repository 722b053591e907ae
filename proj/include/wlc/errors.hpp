#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wlc {

// Error kinds raised by the compute modules. The numeric values are part of
// the C API (see wlc.h) and must not be reordered.
enum class ErrorCode : int {
    InvalidArgument = 1,
    ConfigError = 2,
    StepUnstable = 10,
    DegenerateSteadyState = 11,
    SingularLinearSystem = 12,
    CflViolation = 13,
    NoConvergence = 14,
    NoPeak = 15,
    ZeroEntryAmplitude = 16,
    IllConditionedFit = 17,
    OutOfRange = 18,
    AboveLasingThreshold = 19,
    NoHalfCrossing = 20,
    InsufficientGroupIndex = 21,
    NonpositiveCubicTerm = 22,
    IoError = 30,
};

std::string_view error_name(ErrorCode code) noexcept;

// Validation failures (bad input) as opposed to numerical failures.
bool is_validation_error(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, std::string(error_name(code)) + ": " + what);
}

}  // namespace wlc

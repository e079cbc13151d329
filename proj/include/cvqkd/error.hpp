#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cvqkd {

enum class ErrorKind {
    InvalidParameter,
    NonPhysicalState,
    NumericalFailure,
    SingularConditioning,
    IntegrationFailure,
    UnphysicalEffectiveChannel,
    NoFeasibleSolution,
    ConfigError,
    IoError,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library. The kind is preserved when a
/// pipeline stage re-throws with extra context.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), detail_(what) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& detail() const noexcept { return detail_; }

    /// Same kind, message prefixed with the stage that failed.
    Error annotated(std::string_view stage) const {
        return Error(kind_, std::string(stage) + ": " + detail_);
    }

private:
    ErrorKind kind_;
    std::string detail_;
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidParameter: return "InvalidParameter";
        case ErrorKind::NonPhysicalState: return "NonPhysicalState";
        case ErrorKind::NumericalFailure: return "NumericalFailure";
        case ErrorKind::SingularConditioning: return "SingularConditioning";
        case ErrorKind::IntegrationFailure: return "IntegrationFailure";
        case ErrorKind::UnphysicalEffectiveChannel: return "UnphysicalEffectiveChannel";
        case ErrorKind::NoFeasibleSolution: return "NoFeasibleSolution";
        case ErrorKind::ConfigError: return "ConfigError";
        case ErrorKind::IoError: return "IoError";
    }
    return "Error";
}

}  // namespace cvqkd

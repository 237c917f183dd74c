#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace posehsmm {

enum class ErrorCode {
    EmptySequence,
    MalformedSegmentation,
    DegenerateSelfLoop,
    DurationOutOfRange,
    ChannelAbsent,
    NoObservation,
    NoFeasiblePath,
    InstanceTooLarge,
    NoTransitionDetected,
    LabelMismatch,
    DimensionMismatch,
    InvalidArgument,
    ParseError,
    UnsupportedVersion,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::EmptySequence: return "EmptySequence";
        case ErrorCode::MalformedSegmentation: return "MalformedSegmentation";
        case ErrorCode::DegenerateSelfLoop: return "DegenerateSelfLoop";
        case ErrorCode::DurationOutOfRange: return "DurationOutOfRange";
        case ErrorCode::ChannelAbsent: return "ChannelAbsent";
        case ErrorCode::NoObservation: return "NoObservation";
        case ErrorCode::NoFeasiblePath: return "NoFeasiblePath";
        case ErrorCode::InstanceTooLarge: return "InstanceTooLarge";
        case ErrorCode::NoTransitionDetected: return "NoTransitionDetected";
        case ErrorCode::LabelMismatch: return "LabelMismatch";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI exit-code mapping) can dispatch without parsing text.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& detail) {
    throw Error(code, detail);
}

inline void require(bool condition, ErrorCode code, std::string_view detail) {
    if (!condition) fail(code, std::string(detail));
}

}  // namespace posehsmm

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pfbp {

enum class ErrorCode {
    InvalidArgument,
    NoPositivePeriodicState,
    NoConvergence,
    NoCriticalLength,
    TruncationFailure,
    NonpositiveLinearization,
    RegimeError,
    BracketFailure,
    StepRejected,
    DomainCollapse,
    ParseError,
    ValidationError,
};

inline std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NoPositivePeriodicState: return "NoPositivePeriodicState";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NoCriticalLength: return "NoCriticalLength";
    case ErrorCode::TruncationFailure: return "TruncationFailure";
    case ErrorCode::NonpositiveLinearization: return "NonpositiveLinearization";
    case ErrorCode::RegimeError: return "RegimeError";
    case ErrorCode::BracketFailure: return "BracketFailure";
    case ErrorCode::StepRejected: return "StepRejected";
    case ErrorCode::DomainCollapse: return "DomainCollapse";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    }
    return "Unknown";
}

/// Library exception; carries a machine-readable code next to the message.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), message_(what)
    {
    }

    ErrorCode code() const noexcept { return code_; }
    /// The message without the code prefix.
    const std::string& message() const noexcept { return message_; }

private:
    ErrorCode code_;
    std::string message_;
};

inline void require(bool condition, const std::string& what)
{
    if (!condition)
        throw Error(ErrorCode::InvalidArgument, what);
}

} // namespace pfbp

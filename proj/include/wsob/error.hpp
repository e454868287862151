#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wsob {

enum class ErrorCode {
    InvalidArgument,
    EmptyDomain,
    EmptySlice,
    FiberEscape,
    DegenerateJacobian,
    AllZeroWeight,
    NonFiniteValue,
    StencilUnderflow,
    EmptySupport,
    SingularOperator,
    NotInSupport,
    OutOfDomain,
    NoFitFound,
    DegenerateFit,
    ConfigError,
    IoError,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::EmptyDomain: return "EmptyDomain";
        case ErrorCode::EmptySlice: return "EmptySlice";
        case ErrorCode::FiberEscape: return "FiberEscape";
        case ErrorCode::DegenerateJacobian: return "DegenerateJacobian";
        case ErrorCode::AllZeroWeight: return "AllZeroWeight";
        case ErrorCode::NonFiniteValue: return "NonFiniteValue";
        case ErrorCode::StencilUnderflow: return "StencilUnderflow";
        case ErrorCode::EmptySupport: return "EmptySupport";
        case ErrorCode::SingularOperator: return "SingularOperator";
        case ErrorCode::NotInSupport: return "NotInSupport";
        case ErrorCode::OutOfDomain: return "OutOfDomain";
        case ErrorCode::NoFitFound: return "NoFitFound";
        case ErrorCode::DegenerateFit: return "DegenerateFit";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

/// Single exception type for the library; callers dispatch on code().
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline void require(bool cond, ErrorCode code, const std::string& what) {
    if (!cond) throw Error(code, what);
}

}  // namespace wsob

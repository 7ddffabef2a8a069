#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sparsemix {

// Every failure the library reports carries one of these codes. The CLI maps
// each to its own exit status, so the numeric values are part of the contract.
enum class ErrorCode : int {
    ConfigError = 2,
    IoError = 3,
    EmptyOrSingleton = 10,
    NonFinite = 11,
    OutOfRange = 12,
    DomainError = 13,
    SampleTooSmall = 14,
    UnsupportedStatistic = 15,
    NegativeQ = 16,
    AlphaOutOfRange = 17,
    InsufficientReplicates = 18,
    IncompatibleMethod = 19,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::EmptyOrSingleton: return "EmptyOrSingleton";
        case ErrorCode::NonFinite: return "NonFinite";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::DomainError: return "DomainError";
        case ErrorCode::SampleTooSmall: return "SampleTooSmall";
        case ErrorCode::UnsupportedStatistic: return "UnsupportedStatistic";
        case ErrorCode::NegativeQ: return "NegativeQ";
        case ErrorCode::AlphaOutOfRange: return "AlphaOutOfRange";
        case ErrorCode::InsufficientReplicates: return "InsufficientReplicates";
        case ErrorCode::IncompatibleMethod: return "IncompatibleMethod";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, ErrorCode code, const std::string& what) {
    if (!condition) fail(code, what);
}

}  // namespace sparsemix

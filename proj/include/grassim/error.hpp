#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace grassim {

enum class ErrorCode {
    invalid_argument,
    out_of_range,
    singular_fit,
    empty_region,
    io,
    format,
    not_found,
    conflict,
    cancelled,
};

constexpr std::string_view to_string(ErrorCode c) {
    switch (c) {
        case ErrorCode::invalid_argument: return "invalid_argument";
        case ErrorCode::out_of_range: return "out_of_range";
        case ErrorCode::singular_fit: return "singular_fit";
        case ErrorCode::empty_region: return "empty_region";
        case ErrorCode::io: return "io";
        case ErrorCode::format: return "format";
        case ErrorCode::not_found: return "not_found";
        case ErrorCode::conflict: return "conflict";
        case ErrorCode::cancelled: return "cancelled";
    }
    return "unknown";
}

/// Every failure raised by the library carries a machine-readable code so the
/// CLI can choose an exit status and the service an HTTP status.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message) : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace grassim

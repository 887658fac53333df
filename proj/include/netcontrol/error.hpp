#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace netcontrol {

enum class ErrorCode {
    MalformedRow,
    ShareOutOfRange,
    DuplicateEdge,
    DuplicateNode,
    OversubscribedFirm,
    SelfLoop,
    UnknownNode,
    InvalidValue,
    InvalidThreshold,
    NoPrivateShareholder,
    UnknownTarget,
    TooManyOwners,
    StateSpaceTooLarge,
    NoConvergence,
    Unreachable,
    UnknownFormat,
    InvalidConfig,
    Io,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::ShareOutOfRange: return "ShareOutOfRange";
    case ErrorCode::DuplicateEdge: return "DuplicateEdge";
    case ErrorCode::DuplicateNode: return "DuplicateNode";
    case ErrorCode::OversubscribedFirm: return "OversubscribedFirm";
    case ErrorCode::SelfLoop: return "SelfLoop";
    case ErrorCode::UnknownNode: return "UnknownNode";
    case ErrorCode::InvalidValue: return "InvalidValue";
    case ErrorCode::InvalidThreshold: return "InvalidThreshold";
    case ErrorCode::NoPrivateShareholder: return "NoPrivateShareholder";
    case ErrorCode::UnknownTarget: return "UnknownTarget";
    case ErrorCode::TooManyOwners: return "TooManyOwners";
    case ErrorCode::StateSpaceTooLarge: return "StateSpaceTooLarge";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::Unreachable: return "Unreachable";
    case ErrorCode::UnknownFormat: return "UnknownFormat";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

/// Every failure raised by the library. `context()` carries the file/line or
/// entity the failure refers to, when one is known.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::string context = {})
        : std::runtime_error(format(code, message, context)),
          code_(code), detail_(message), context_(std::move(context)) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }
    const std::string& context() const noexcept { return context_; }

private:
    static std::string format(ErrorCode code, const std::string& message,
                              const std::string& context) {
        std::string out{to_string(code)};
        out += ": ";
        out += message;
        if (!context.empty()) {
            out += " (";
            out += context;
            out += ")";
        }
        return out;
    }

    ErrorCode code_;
    std::string detail_;
    std::string context_;
};

} // namespace netcontrol

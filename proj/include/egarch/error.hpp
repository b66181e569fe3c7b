#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace egarch {

/// Failure categories shared by every module. The CLI maps them to exit codes.
enum class ErrorKind {
    InvalidArgument,
    NonStationary,
    InadmissibleParams,
    Overflow,
    Unidentifiable,
    EmptyFeasibleSet,
    NonConvergence,
    SingularB,
    MissingLatentState,
    ParseError,
    NonFiniteValue,
    TooShort,
    Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

    /// True for failures caused by the data or parameters rather than by the caller's usage.
    [[nodiscard]] bool is_domain_error() const noexcept;

private:
    ErrorKind kind_;
};

}  // namespace egarch

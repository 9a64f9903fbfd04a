#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace propsim {

enum class ErrorCode {
    DegenerateDenominator,
    NoRootFound,
    MaturityCollapse,
    UndefinedCritical,
    InvalidAxis,
    SchemaError,
    RangeError,
    InvalidState,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-readable code and, where it applies, the
/// dotted path of the offending input field.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message, std::string field = {})
        : std::runtime_error(std::move(message)), code_(code), field_(std::move(field)) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string& field() const noexcept { return field_; }

private:
    ErrorCode code_;
    std::string field_;
};

}  // namespace propsim

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace aquaseg {

enum class ErrorCode {
    MalformedHeader,
    RankMismatch,
    NonFiniteValue,
    SchemaError,
    MissingFile,
    GroupOverlap,
    ShapeMismatch,
    ZeroVector,
    LabelOutOfRange,
    EmptyMatrix,
    IoError,
    ConfigError,
};

inline constexpr std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::RankMismatch: return "RankMismatch";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::GroupOverlap: return "GroupOverlap";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {
    }

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace aquaseg

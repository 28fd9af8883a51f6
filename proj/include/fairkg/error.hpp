#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fairkg {

enum class ErrorCode {
    DuplicateLabel,
    NotFound,
    NotProvisional,
    NetworkError,
    MalformedResponse,
    InvalidIdentifier,
    MissingIdentifier,
    MissingTitle,
    SchemaViolation,
    EmptyDocument,
    MalformedPattern,
    DuplicatePriority,
    UnknownLabel,
    DatasetNotFound,
    IoError,
    CorruptStore,
    ProviderError,
    DimensionMismatch,
    EmptyIndex,
    AmbiguousComparison,
    InvalidArgument,
    DuplicateCell,
    ScoreOutOfRange,
    MalformedRow,
    InsufficientData,
    SessionNotFound,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-readable code. `details` holds offending
/// values (e.g. every unresolved DOI) for callers that report them.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::vector<std::string> details = {})
        : std::runtime_error(message), code_(code), details_(std::move(details)) {}

    ErrorCode code() const noexcept { return code_; }
    const std::vector<std::string>& details() const noexcept { return details_; }

private:
    ErrorCode code_;
    std::vector<std::string> details_;
};

} // namespace fairkg

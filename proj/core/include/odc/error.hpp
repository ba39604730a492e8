#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace odc {

// Every failure surfaced by the library carries one of these kinds. The CLI
// maps the category (data vs numerical) onto its exit code.
enum class ErrorKind {
    MissingColumn,
    UnparsableCell,
    NonPositiveTime,
    EmptyFile,
    AlreadyTransformed,
    InvalidArgument,
    DimensionMismatch,
    LengthMismatch,
    RankDeficientDesign,
    Unbounded,
    PseudoPointUnstable,
    IterationLimit,
    MissingFit,
    FingerprintMismatch,
    WrongMethod,
    IoError,
};

enum class ErrorCategory { Data, Numerical, Usage };

std::string_view to_string(ErrorKind kind);
ErrorCategory category_of(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);

    ErrorKind kind() const noexcept { return kind_; }
    ErrorCategory category() const noexcept { return category_of(kind_); }

private:
    ErrorKind kind_;
};

} // namespace odc

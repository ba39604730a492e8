#include "odc/error.hpp"

namespace odc {

std::string_view to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::UnparsableCell: return "UnparsableCell";
    case ErrorKind::NonPositiveTime: return "NonPositiveTime";
    case ErrorKind::EmptyFile: return "EmptyFile";
    case ErrorKind::AlreadyTransformed: return "AlreadyTransformed";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::RankDeficientDesign: return "RankDeficientDesign";
    case ErrorKind::Unbounded: return "Unbounded";
    case ErrorKind::PseudoPointUnstable: return "PseudoPointUnstable";
    case ErrorKind::IterationLimit: return "IterationLimit";
    case ErrorKind::MissingFit: return "MissingFit";
    case ErrorKind::FingerprintMismatch: return "FingerprintMismatch";
    case ErrorKind::WrongMethod: return "WrongMethod";
    case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

ErrorCategory category_of(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::RankDeficientDesign:
    case ErrorKind::Unbounded:
    case ErrorKind::PseudoPointUnstable:
    case ErrorKind::IterationLimit:
        return ErrorCategory::Numerical;
    case ErrorKind::InvalidArgument:
    case ErrorKind::WrongMethod:
        return ErrorCategory::Usage;
    default:
        return ErrorCategory::Data;
    }
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message)
    , kind_(kind)
{
}

} // namespace odc

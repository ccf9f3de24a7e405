#include "windcast/common/error.hpp"

namespace windcast {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::UnparsableTimestamp: return "UnparsableTimestamp";
    case ErrorKind::EmptyFile: return "EmptyFile";
    case ErrorKind::AllMissingColumn: return "AllMissingColumn";
    case ErrorKind::NonIntegerRatio: return "NonIntegerRatio";
    case ErrorKind::UnknownColumn: return "UnknownColumn";
    case ErrorKind::OverlappingYears: return "OverlappingYears";
    case ErrorKind::EmptySplit: return "EmptySplit";
    case ErrorKind::SignalTooShort: return "SignalTooShort";
    case ErrorKind::NonFiniteInput: return "NonFiniteInput";
    case ErrorKind::PeriodTooLong: return "PeriodTooLong";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NonScalarLoss: return "NonScalarLoss";
    case ErrorKind::EmptyFeatureList: return "EmptyFeatureList";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::DivergedLoss: return "DivergedLoss";
    case ErrorKind::ModelCountMismatch: return "ModelCountMismatch";
    case ErrorKind::EmptyObservations: return "EmptyObservations";
    case ErrorKind::OutOfBoundsSample: return "OutOfBoundsSample";
    case ErrorKind::AllTrialsFailed: return "AllTrialsFailed";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::ZeroMaxActual: return "ZeroMaxActual";
    case ErrorKind::EmptyHistory: return "EmptyHistory";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::FileNotFound: return "FileNotFound";
    case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

bool is_validation_error(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::DivergedLoss:
    case ErrorKind::AllTrialsFailed:
    case ErrorKind::IoError:
        return false;
    default:
        return true;
    }
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

} // namespace windcast

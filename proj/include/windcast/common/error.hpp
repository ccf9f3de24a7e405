#pragma once

#include <stdexcept>
#include <string>

namespace windcast {

enum class ErrorKind {
    // data pipeline
    MissingColumn,
    UnparsableTimestamp,
    EmptyFile,
    AllMissingColumn,
    NonIntegerRatio,
    UnknownColumn,
    OverlappingYears,
    EmptySplit,
    // decomposition
    SignalTooShort,
    NonFiniteInput,
    PeriodTooLong,
    // autodiff / model
    ShapeMismatch,
    NonScalarLoss,
    EmptyFeatureList,
    EmptyDataset,
    DivergedLoss,
    ModelCountMismatch,
    // tpe / tuner
    EmptyObservations,
    OutOfBoundsSample,
    AllTrialsFailed,
    // evaluation
    LengthMismatch,
    ZeroMaxActual,
    EmptyHistory,
    // generic
    InvalidConfig,
    ParseError,
    FileNotFound,
    IoError,
};

const char* to_string(ErrorKind kind) noexcept;

/// Input/config problems the caller can fix, as opposed to runtime failures
/// (diverged training, I/O faults).
bool is_validation_error(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace windcast

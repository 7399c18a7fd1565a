#pragma once

#include <stdexcept>
#include <string>

namespace shapeshot {

// Every library failure derives from Error so callers (the CLI in particular)
// can map the category to an exit code.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Operand shapes do not conform.
struct DimensionError : Error {
    using Error::Error;
};

// A caller broke a documented precondition.
struct ContractError : Error {
    using Error::Error;
};

// NaN or Inf produced by an operation.
struct NumericError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

// Dataset too small for the requested episode.
struct SamplingError : Error {
    using Error::Error;
};

struct TrainingError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

// Bad magic, version or checksum in an on-disk artifact.
struct FormatError : Error {
    using Error::Error;
};

}  // namespace shapeshot

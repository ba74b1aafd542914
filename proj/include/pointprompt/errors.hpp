#pragma once

#include <stdexcept>
#include <string>

namespace pointprompt {

// Error taxonomy. Every failure mode maps onto one of these so callers (and
// the CLI exit-code mapping) can distinguish bad configuration from bad data
// from numeric blowups.

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shape / dimension mismatches between tensors.
struct ShapeError : Error {
    using Error::Error;
};

// NaN/Inf where finite values are required.
struct NumericError : Error {
    using Error::Error;
};

// Zero-norm vector fed to a similarity that needs a direction.
struct DegenerateVectorError : Error {
    using Error::Error;
};

// Invalid argument value (counts out of range, unknown enum, ...).
struct ArgumentError : Error {
    using Error::Error;
};

// API contract violations (non-scalar backward root, repeated backward, ...).
struct ContractError : Error {
    using Error::Error;
};

// Malformed input file; message carries the line number.
struct ParseError : Error {
    using Error::Error;
};

// Dataset-level problems (missing class, label out of range, ...).
struct DataError : Error {
    using Error::Error;
};

// Invalid or inconsistent run configuration.
struct ConfigError : Error {
    using Error::Error;
};

// Checkpoint container problems (bad magic, version, checksum, shapes).
struct CheckpointError : Error {
    using Error::Error;
};

}  // namespace pointprompt

#pragma once

#include <stdexcept>
#include <string>

namespace drumscribe {

/// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tensor shape / dimension mismatches. Messages name the offending shapes.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Malformed or truncated file contents (WAV, MSPC1, DRTR1).
class FormatError : public Error {
public:
    using Error::Error;
};

/// Structurally valid file using an encoding we do not handle.
class UnsupportedCodecError : public FormatError {
public:
    using FormatError::FormatError;
};

/// Invalid configuration values or unknown config keys.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Dataset layout problems (missing or empty class directories, ...).
class DatasetError : public Error {
public:
    using Error::Error;
};

/// Filesystem failures, with path context in the message.
class IoError : public Error {
public:
    using Error::Error;
};

/// Raised when a training run produces a non-finite loss.
class TrainingDivergedError : public Error {
public:
    TrainingDivergedError(const std::string& msg, int epoch, int batch)
        : Error(msg), epoch_(epoch), batch_(batch) {}
    int epoch() const { return epoch_; }
    int batch() const { return batch_; }

private:
    int epoch_;
    int batch_;
};

}  // namespace drumscribe

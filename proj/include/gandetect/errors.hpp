#pragma once

#include <stdexcept>
#include <string>

namespace gandetect {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A file could not be read or parsed as an image.
class DecodeError : public Error {
public:
    using Error::Error;
};

/// The image decoded fine but its layout is unsupported (band count, depth).
class FormatError : public Error {
public:
    using Error::Error;
};

/// Inputs lie outside an operation's domain (offsets, crop sizes, dimensions).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration: ratios, plans, manifests, run files, CLI options.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Tensor or parameter shapes disagree with the model configuration.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A non-finite value appeared during forward/backward evaluation.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Training diverged; the message carries the epoch and batch index.
class TrainingError : public Error {
public:
    TrainingError(const std::string& what, int epoch, int batch);

    int epoch() const noexcept { return epoch_; }
    int batch() const noexcept { return batch_; }

private:
    int epoch_;
    int batch_;
};

/// Checkpoint or tensor-cache container is malformed or incompatible.
class CheckpointError : public Error {
public:
    using Error::Error;
};

}  // namespace gandetect

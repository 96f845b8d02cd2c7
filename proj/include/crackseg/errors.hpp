#pragma once

#include <stdexcept>
#include <string>

namespace crackseg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dataset layout, file decoding or manifest problems. The message names the offending path.
class IngestionError : public Error {
public:
    using Error::Error;
};

/// Tensor or raster dimensions that violate an operation's contract.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration values (specs, policies, plans, experiment files).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Checkpoint archive read/write or topology mismatch.
class ArchiveError : public Error {
public:
    using Error::Error;
};

}  // namespace crackseg

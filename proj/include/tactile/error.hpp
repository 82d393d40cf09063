#pragma once

#include <stdexcept>
#include <string>

namespace tactile {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite or otherwise unusable sensor data.
class DataQualityError : public Error {
public:
    using Error::Error;
};

/// Sequence too short or structurally broken.
class InvalidSequenceError : public Error {
public:
    using Error::Error;
};

/// A capture contained no above-threshold frame.
class EmptyTouchError : public Error {
public:
    using Error::Error;
};

class LoadError : public Error {
public:
    using Error::Error;
};

class SplitError : public Error {
public:
    using Error::Error;
};

/// Non-finite activation inside the network.
class NumericalError : public Error {
public:
    NumericalError(const std::string& what, std::size_t timestep)
        : Error(what + " (timestep " + std::to_string(timestep) + ")"), timestep_(timestep) {}
    std::size_t timestep() const noexcept { return timestep_; }

private:
    std::size_t timestep_;
};

/// Model file that cannot be decoded.
class FormatError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace tactile

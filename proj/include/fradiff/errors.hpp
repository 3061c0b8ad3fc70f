#pragma once

#include <stdexcept>
#include <string>

namespace fradiff {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numeric parameter lies outside its admissible range.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Field data violates an invariant (NaN, significant negativity, nonzero boundary).
class DataError : public Error {
public:
    using Error::Error;
};

/// Objects that must share a grid (or shape) do not.
class StructuralError : public Error {
public:
    using Error::Error;
};

/// Two computed quantities contradict each other.
class InconsistencyError : public Error {
public:
    using Error::Error;
};

class FitError : public Error {
public:
    using Error::Error;
};

/// The implicit time step did not converge.
class StepError : public Error {
public:
    StepError(const std::string& what, std::size_t step, double residual)
        : Error(what), step_(step), residual_(residual) {}

    std::size_t step() const noexcept { return step_; }
    double residual() const noexcept { return residual_; }

private:
    std::size_t step_;
    double residual_;
};

/// Invalid scenario configuration; carries the offending dotted key.
class ConfigError : public Error {
public:
    ConfigError(std::string key, const std::string& what)
        : Error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

}  // namespace fradiff

#pragma once

#include <stdexcept>
#include <string>

namespace fmtt {

/// A schedule coefficient is singular at the requested time (e.g. eta at t=0
/// with zero offset).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// The adaptive integrator ran out of steps before reaching the end time.
class ToleranceError : public std::runtime_error {
public:
    ToleranceError(const std::string& what, double reached_time)
        : std::runtime_error(what), reached_time_(reached_time) {}

    double reached_time() const noexcept { return reached_time_; }

private:
    double reached_time_;
};

/// Requested combination of drift multiplier, look-ahead and weight scheme
/// cannot be evaluated.
class SchemeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Every particle carries zero weight.
class DegenerateEnsembleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid experiment configuration; `path` names the offending key.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(const std::string& path, const std::string& message)
        : std::invalid_argument(path + ": " + message), path_(path), message_(message) {}

    const std::string& path() const noexcept { return path_; }
    const std::string& message() const noexcept { return message_; }

private:
    std::string path_;
    std::string message_;
};

}  // namespace fmtt
